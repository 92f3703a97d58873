#pragma once

#include "sbra/bench_models.hpp"
#include "sbra/benchmark.hpp"
#include "sbra/complex_lbfgs.hpp"
#include "sbra/errors.hpp"
#include "sbra/io.hpp"
#include "sbra/lsq_ra.hpp"
#include "sbra/metrics.hpp"
#include "sbra/pce_basis.hpp"
#include "sbra/sampling.hpp"
#include "sbra/sbra_core.hpp"
#include "sbra/surrogate.hpp"
