#pragma once

#include "opnp/core.hpp"
#include "opnp/diagnostics.hpp"
#include "opnp/error.hpp"
#include "opnp/io.hpp"
#include "opnp/metrics.hpp"
#include "opnp/parallel.hpp"
#include "opnp/pruning.hpp"
#include "opnp/scoring.hpp"
#include "opnp/sensitivity.hpp"
#include "opnp/sweep.hpp"
#include "opnp/toymodel.hpp"
