#pragma once

// Convenience umbrella: pulls in the whole library.

#include "l1bandit/chart.hpp"
#include "l1bandit/config.hpp"
#include "l1bandit/core.hpp"
#include "l1bandit/diagnostics.hpp"
#include "l1bandit/environments.hpp"
#include "l1bandit/experiment.hpp"
#include "l1bandit/io.hpp"
#include "l1bandit/policies.hpp"
#include "l1bandit/rng.hpp"
#include "l1bandit/solvers.hpp"
