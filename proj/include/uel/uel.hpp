#pragma once

#include "uel/baselines.hpp"
#include "uel/crossover.hpp"
#include "uel/el_core.hpp"
#include "uel/error.hpp"
#include "uel/hypothesis_tests.hpp"
#include "uel/io.hpp"
#include "uel/kernels.hpp"
#include "uel/linalg.hpp"
#include "uel/numeric.hpp"
#include "uel/random.hpp"
#include "uel/sim.hpp"
#include "uel/variance.hpp"
