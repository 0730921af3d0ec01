#pragma once

// Umbrella header: AMP with side information, its conditional denoisers, the
// state-evolution recursion, brute-force oracles, and the experiment runner.

#include "ampsi/amp.hpp"
#include "ampsi/denoisers.hpp"
#include "ampsi/errors.hpp"
#include "ampsi/experiment.hpp"
#include "ampsi/linear_system.hpp"
#include "ampsi/oracle.hpp"
#include "ampsi/rng.hpp"
#include "ampsi/signal_model.hpp"
#include "ampsi/state_evolution.hpp"
