#pragma once

#include "rlsbias/config.hpp"
#include "rlsbias/diagnostics.hpp"
#include "rlsbias/errors.hpp"
#include "rlsbias/estimators.hpp"
#include "rlsbias/excitation.hpp"
#include "rlsbias/experiment.hpp"
#include "rlsbias/matrix_kernel.hpp"
#include "rlsbias/rng.hpp"
#include "rlsbias/sysid_models.hpp"
#include "rlsbias/trace_io.hpp"
#include "rlsbias/version.hpp"
