#pragma once

// Umbrella header: sparse inverse covariance estimation by penalized
// Gaussian likelihood, with the simulation, evaluation, tuning and
// classification machinery built around it.

#include "spice/classify.hpp"
#include "spice/csv.hpp"
#include "spice/errors.hpp"
#include "spice/estimators.hpp"
#include "spice/evaluation.hpp"
#include "spice/experiments.hpp"
#include "spice/linalg.hpp"
#include "spice/matrix.hpp"
#include "spice/rng.hpp"
#include "spice/simulation.hpp"
#include "spice/solver.hpp"
#include "spice/tuning.hpp"
