#pragma once

// Umbrella header for the tailcausal library: heavy-tailed homogeneous
// structural causal models, their ancestral impulse-response and causal tail
// coefficient matrices, pairwise causal classification, and recursive weight
// recovery, plus the Monte Carlo oracles that validate the analytic paths.

#include "tailcausal/common.hpp"
#include "tailcausal/rng.hpp"
#include "tailcausal/matrix.hpp"
#include "tailcausal/dag.hpp"
#include "tailcausal/model.hpp"
#include "tailcausal/air.hpp"
#include "tailcausal/ctc.hpp"
#include "tailcausal/discovery.hpp"
#include "tailcausal/oracle.hpp"
