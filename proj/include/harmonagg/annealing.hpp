#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "harmonagg/chord.hpp"
#include "harmonagg/objectives.hpp"
#include "harmonagg/profile.hpp"
#include "harmonagg/rng.hpp"

namespace harmonagg {

struct AnnealingConfig {
    int iterations = 1000;
    double t_initial = 1.0;
    double cooling = 0.995; // geometric factor per iteration
    std::uint64_t seed = 0;
};

enum class Direction { minimize, maximize };

// Per-iteration record of one annealing run.
struct SearchTrace {
    struct Row {
        double current_score;
        double best_score;
        double temperature;
    };
    std::vector<Row> rows;
    std::size_t accepted = 0;
    std::string rng_id{kRngId};
};

template <class State>
struct AnnealResult {
    State best;
    double best_score = 0.0;
    State last;
    SearchTrace trace;
};

// Metropolis loop with geometric cooling. Improving moves are always
// accepted; a worsening move with canonical-minimization delta D is accepted
// with probability exp(-D / T). Returns the best state ever visited (ties
// keep the earlier one). Fully determined by config.seed.
template <class State, class Objective, class Neighbor>
AnnealResult<State> anneal(Objective&& objective, Direction direction,
                           State initial, Neighbor&& neighbor,
                           const AnnealingConfig& config) {
    Rng rng(config.seed);
    const double sign = direction == Direction::minimize ? 1.0 : -1.0;

    State current = std::move(initial);
    double current_cost = sign * objective(current);

    AnnealResult<State> result;
    result.best = current;
    double best_cost = current_cost;
    result.trace.rows.reserve(config.iterations);

    double temperature = config.t_initial;
    for (int it = 0; it < config.iterations; ++it) {
        State candidate = neighbor(current, rng);
        const double candidate_cost = sign * objective(candidate);
        const double delta = candidate_cost - current_cost;
        if (delta <= 0.0 ||
            std::exp(-delta / temperature) > uniform01(rng)) {
            current = std::move(candidate);
            current_cost = candidate_cost;
            ++result.trace.accepted;
            if (current_cost < best_cost) {
                result.best = current;
                best_cost = current_cost;
            }
        }
        result.trace.rows.push_back(
            {sign * current_cost, sign * best_cost, temperature});
        temperature *= config.cooling;
    }
    result.best_score = sign * best_cost;
    result.last = std::move(current);
    return result;
}

inline void write_trace_csv(const SearchTrace& trace, std::ostream& out) {
    out << "iteration,current_score,best_score,temperature\n";
    for (std::size_t i = 0; i < trace.rows.size(); ++i) {
        const auto& r = trace.rows[i];
        out << i << ',' << r.current_score << ',' << r.best_score << ','
            << r.temperature << '\n';
    }
}

// Replace the chord at one uniformly chosen position with a uniformly chosen
// different chord from the active alphabet.
inline std::vector<ChordId> sequence_neighbor(
    const std::vector<ChordId>& state, Rng& rng,
    std::span<const ChordId> active_alphabet) {
    std::vector<ChordId> next = state;
    const std::size_t pos = bounded(rng, next.size());
    const std::size_t m = active_alphabet.size();
    // Draw from the alphabet minus the incumbent chord.
    std::size_t pick = bounded(rng, m - 1);
    ChordId replacement = active_alphabet[pick];
    if (replacement == next[pos]) replacement = active_alphabet[m - 1];
    next[pos] = replacement;
    return next;
}

inline std::vector<ChordId> full_alphabet() {
    std::vector<ChordId> ids(kNumChords);
    for (int i = 0; i < kNumChords; ++i) ids[i] = i;
    return ids;
}

// Joint state for Clustered-Kemeny search.
struct ClusteredState {
    std::vector<ChordId> w;
    SectionPartition partition;
    ClusterAssignment assignment;
};

// One move: mutate a chord, shift one section boundary by +-1, or move one
// agent to another section, with equal probability. Moves that cannot apply
// (single section, no room to shift) return the state unchanged.
inline ClusteredState clustered_neighbor(
    const ClusteredState& state, Rng& rng,
    std::span<const ChordId> active_alphabet) {
    ClusteredState next = state;
    const int k = static_cast<int>(next.w.size());
    const int num_sections = next.partition.sections();
    switch (bounded(rng, 3)) {
        case 0: {
            next.w = sequence_neighbor(next.w, rng, active_alphabet);
            break;
        }
        case 1: {
            if (num_sections < 2) break;
            const std::size_t b = 1 + bounded(rng, num_sections - 1);
            const int shift = bounded(rng, 2) ? 1 : -1;
            const int moved = next.partition.starts[b] + shift;
            const int lo = next.partition.starts[b - 1] + 1;
            const int hi = (b + 1 < next.partition.starts.size())
                               ? next.partition.starts[b + 1] - 1
                               : k - 1;
            if (moved >= lo && moved <= hi)
                next.partition.starts[b] = moved;
            break;
        }
        case 2: {
            if (num_sections < 2) break;
            const std::size_t agent =
                bounded(rng, next.assignment.section_of.size());
            int target = static_cast<int>(bounded(rng, num_sections - 1));
            if (target >= next.assignment.section_of[agent]) ++target;
            next.assignment.section_of[agent] = target;
            break;
        }
    }
    return next;
}

} // namespace harmonagg
