#pragma once

// Aggregation of multi-agent chord-sequence suggestions: the 120-chord
// alphabet with Jaccard distances, a trainable 2-gram transition model,
// plurality / Kemeny / PAV / clustered-Kemeny objectives with 2-gram
// variants, exact and annealing solvers, and a simulation harness.

#include "harmonagg/annealing.hpp"
#include "harmonagg/chord.hpp"
#include "harmonagg/corpus.hpp"
#include "harmonagg/errors.hpp"
#include "harmonagg/objectives.hpp"
#include "harmonagg/profile.hpp"
#include "harmonagg/rng.hpp"
#include "harmonagg/simulation.hpp"
#include "harmonagg/solvers.hpp"
#include "harmonagg/transition_model.hpp"
