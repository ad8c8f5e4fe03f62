#pragma once

#include "mlsm/adjoint.hpp"
#include "mlsm/config.hpp"
#include "mlsm/eikonal.hpp"
#include "mlsm/errors.hpp"
#include "mlsm/grid_fields.hpp"
#include "mlsm/illumination.hpp"
#include "mlsm/inversion.hpp"
#include "mlsm/mlsf.hpp"
#include "mlsm/motion.hpp"
#include "mlsm/parallel.hpp"
#include "mlsm/regularize.hpp"
#include "mlsm/scenarios.hpp"
