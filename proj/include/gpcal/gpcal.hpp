#ifndef GPCAL_GPCAL_HPP
#define GPCAL_GPCAL_HPP

// Universal-Kriging calibration of linearized computer models and
// model-error-aware prediction of the underlying physical system.

#include "gpcal/config.hpp"
#include "gpcal/crossval.hpp"
#include "gpcal/dataset.hpp"
#include "gpcal/demo_friction.hpp"
#include "gpcal/demo_parabola.hpp"
#include "gpcal/design.hpp"
#include "gpcal/errors.hpp"
#include "gpcal/infer.hpp"
#include "gpcal/kernels.hpp"
#include "gpcal/linalg.hpp"
#include "gpcal/model.hpp"
#include "gpcal/nelder_mead.hpp"
#include "gpcal/reml.hpp"
#include "gpcal/report.hpp"

#endif
