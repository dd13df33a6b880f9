#pragma once

#include "hemogen/augment.hpp"
#include "hemogen/components.hpp"
#include "hemogen/errors.hpp"
#include "hemogen/grid.hpp"
#include "hemogen/image_io.hpp"
#include "hemogen/instance_mask.hpp"
#include "hemogen/metrics.hpp"
#include "hemogen/probability_map.hpp"
#include "hemogen/random.hpp"
#include "hemogen/run_config.hpp"
#include "hemogen/serialization.hpp"
#include "hemogen/shape_db.hpp"
#include "hemogen/synth.hpp"
