#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "harmonagg/annealing.hpp"
#include "harmonagg/chord.hpp"
#include "harmonagg/errors.hpp"
#include "harmonagg/objectives.hpp"
#include "harmonagg/profile.hpp"
#include "harmonagg/transition_model.hpp"

namespace harmonagg {

namespace detail {

// Ascending id order keeps the lowest-id tie-break uniform across solvers.
inline std::vector<ChordId> resolve_alphabet(std::span<const ChordId> active) {
    if (active.empty()) return full_alphabet();
    std::vector<ChordId> ids(active.begin(), active.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

} // namespace detail

// Per-position mode; ties go to the lowest chord id.
inline Solution solve_plurality(const Profile& profile) {
    Solution solution;
    solution.w.resize(profile.length());
    std::vector<int> votes(kNumChords);
    for (int j = 0; j < profile.length(); ++j) {
        std::fill(votes.begin(), votes.end(), 0);
        for (int i = 0; i < profile.agents(); ++i) ++votes[profile(i, j)];
        int best = 0;
        for (int a = 1; a < kNumChords; ++a)
            if (votes[a] > votes[best]) best = a;
        solution.w[j] = best;
    }
    solution.scores["plurality"] =
        static_cast<double>(score_plurality(profile, solution.w));
    return solution;
}

// Per-position argmin of summed Jaccard distance; ties to the lowest id.
inline Solution solve_kemeny(const Profile& profile,
                             std::span<const ChordId> active_alphabet = {}) {
    const auto alphabet = detail::resolve_alphabet(active_alphabet);
    const DistanceMatrix& d = chord_distance();
    Solution solution;
    solution.w.resize(profile.length());
    for (int j = 0; j < profile.length(); ++j) {
        ChordId best = alphabet.front();
        double best_cost = std::numeric_limits<double>::infinity();
        for (ChordId a : alphabet) {
            double cost = 0.0;
            for (int i = 0; i < profile.agents(); ++i)
                cost += d(profile(i, j), a);
            if (cost < best_cost) {
                best_cost = cost;
                best = a;
            }
        }
        solution.w[j] = best;
    }
    solution.scores["kemeny"] = score_kemeny(profile, solution.w);
    return solution;
}

namespace detail {

// Viterbi-style chain minimization over (position, chord) states.
// position_cost is k x |alphabet| in alphabet order; the transition cost
// between consecutive chords is transition_coef * -ln p(a' -> a). Ties take
// the lowest chord id at every argmin.
inline std::pair<std::vector<ChordId>, double> chain_minimize(
    const std::vector<std::vector<double>>& position_cost,
    std::span<const ChordId> alphabet, double transition_coef,
    const TransitionModel* model) {
    const int k = static_cast<int>(position_cost.size());
    const int m = static_cast<int>(alphabet.size());

    std::vector<double> cost(position_cost[0]);
    std::vector<std::vector<int>> back(k, std::vector<int>(m, -1));

    std::vector<double> edge; // -ln p restricted to the alphabet
    if (transition_coef != 0.0) {
        edge.resize(std::size_t(m) * m);
        for (int u = 0; u < m; ++u)
            for (int v = 0; v < m; ++v) {
                const double p = (*model)(alphabet[u], alphabet[v]);
                if (p <= 0.0)
                    throw ZeroProbabilityTransitionError(alphabet[u],
                                                         alphabet[v]);
                edge[std::size_t(u) * m + v] = -std::log(p);
            }
    }

    std::vector<double> next(m);
    for (int j = 1; j < k; ++j) {
        for (int v = 0; v < m; ++v) {
            int best_u = 0;
            double best = cost[0] + (transition_coef != 0.0
                                         ? transition_coef * edge[v]
                                         : 0.0);
            for (int u = 1; u < m; ++u) {
                const double c =
                    cost[u] + (transition_coef != 0.0
                                   ? transition_coef *
                                         edge[std::size_t(u) * m + v]
                                   : 0.0);
                if (c < best) {
                    best = c;
                    best_u = u;
                }
            }
            next[v] = best + position_cost[j][v];
            back[j][v] = best_u;
        }
        cost.swap(next);
    }

    int best_v = 0;
    for (int v = 1; v < m; ++v)
        if (cost[v] < cost[best_v]) best_v = v;
    const double total = cost[best_v];

    std::vector<ChordId> w(k);
    int v = best_v;
    for (int j = k - 1; j >= 0; --j) {
        w[j] = alphabet[v];
        if (j > 0) v = back[j][v];
    }
    return {std::move(w), total};
}

} // namespace detail

// Exact minimizer of x_K * K(W) + (1 - x_K) * G(W) by dynamic programming
// over (position, last chord). O(k * m^2 + k * m * n).
inline Solution solve_kemeny_2gram_dp(const Profile& profile,
                                      const ObjectiveWeights& weights,
                                      const TransitionModel& model,
                                      std::span<const ChordId> active_alphabet = {}) {
    const auto alphabet = detail::resolve_alphabet(active_alphabet);
    const DistanceMatrix& d = chord_distance();
    const int k = profile.length();
    const int m = static_cast<int>(alphabet.size());

    std::vector<std::vector<double>> position_cost(k, std::vector<double>(m));
    for (int j = 0; j < k; ++j)
        for (int v = 0; v < m; ++v) {
            double column = 0.0;
            for (int i = 0; i < profile.agents(); ++i)
                column += d(profile(i, j), alphabet[v]);
            position_cost[j][v] = weights.x_k * column;
        }

    auto [w, total] = detail::chain_minimize(position_cost, alphabet,
                                             1.0 - weights.x_k, &model);
    Solution solution;
    solution.w = std::move(w);
    solution.scores["kemeny2"] = total;
    return solution;
}

// Exact maximizer of x_M * M(W) - (1 - x_M) * G(W); same chain DP on the
// negated match counts.
inline Solution solve_plurality_2gram_dp(const Profile& profile,
                                         const ObjectiveWeights& weights,
                                         const TransitionModel& model,
                                         std::span<const ChordId> active_alphabet = {}) {
    const auto alphabet = detail::resolve_alphabet(active_alphabet);
    const int k = profile.length();
    const int m = static_cast<int>(alphabet.size());

    std::vector<std::vector<double>> position_cost(k, std::vector<double>(m));
    for (int j = 0; j < k; ++j)
        for (int v = 0; v < m; ++v) {
            int matches = 0;
            for (int i = 0; i < profile.agents(); ++i)
                if (profile(i, j) == alphabet[v]) ++matches;
            position_cost[j][v] = -weights.x_m * matches;
        }

    auto [w, total] = detail::chain_minimize(position_cost, alphabet,
                                             1.0 - weights.x_m, &model);
    Solution solution;
    solution.w = std::move(w);
    solution.scores["plurality2"] = -total;
    return solution;
}

// Exhaustive enumeration oracle over alphabet_subset^k.
inline std::pair<Solution, double> brute_force_optimum(
    const std::function<double(std::span<const ChordId>)>& objective,
    Direction direction, std::span<const ChordId> alphabet_subset, int k,
    std::uint64_t budget = 1'000'000) {
    const std::size_t m = alphabet_subset.size();
    if (m == 0 || k < 1) throw Error("brute force needs a non-empty space");
    double space = 1.0;
    for (int j = 0; j < k; ++j) space *= static_cast<double>(m);
    if (space > static_cast<double>(budget))
        throw BudgetExceededError("search space " + std::to_string(space) +
                                  " exceeds budget " + std::to_string(budget));

    const double sign = direction == Direction::minimize ? 1.0 : -1.0;
    std::vector<std::size_t> odometer(k, 0);
    std::vector<ChordId> w(k, alphabet_subset[0]);
    std::vector<ChordId> best_w = w;
    double best_cost = sign * objective(w);
    while (true) {
        int pos = k - 1;
        while (pos >= 0 && odometer[pos] == m - 1) {
            odometer[pos] = 0;
            w[pos] = alphabet_subset[0];
            --pos;
        }
        if (pos < 0) break;
        ++odometer[pos];
        w[pos] = alphabet_subset[odometer[pos]];
        const double cost = sign * objective(w);
        if (cost < best_cost) {
            best_cost = cost;
            best_w = w;
        }
    }
    Solution solution;
    solution.w = std::move(best_w);
    return {std::move(solution), sign * best_cost};
}

// Annealing solver for the PAV family, seeded from the Plurality solution.
inline Solution solve_pav(const Profile& profile,
                          const ObjectiveWeights& weights,
                          const TransitionModel* model,
                          const AnnealingConfig& config,
                          std::span<const ChordId> active_alphabet = {},
                          SearchTrace* trace_out = nullptr) {
    const auto alphabet = detail::resolve_alphabet(active_alphabet);
    Solution initial = solve_plurality(profile);

    auto objective = [&](const std::vector<ChordId>& w) {
        return model ? combined_pav2(profile, w, weights, *model)
                     : score_pav(profile, w);
    };
    auto neighbor = [&](const std::vector<ChordId>& w, Rng& rng) {
        return sequence_neighbor(w, rng, alphabet);
    };
    auto result = anneal(objective, Direction::maximize, std::move(initial.w),
                         neighbor, config);

    Solution solution;
    solution.w = std::move(result.best);
    solution.scores[model ? "pav2" : "pav"] = result.best_score;
    if (trace_out) *trace_out = std::move(result.trace);
    return solution;
}

enum class ClusteredMode { exact, anneal };

struct ClusteredSolveResult {
    Solution solution;
    SectionPartition partition;
    ClusterAssignment assignment;
    double score = 0.0;
};

struct ClusteredSolveConfig {
    ClusteredMode mode = ClusteredMode::exact;
    // Exact mode enumerates (partition, assignment) pairs while the total
    // stays within enumeration_budget; above that it falls back to
    // alternating fixed-point refinement per partition, and past
    // partition_budget it refuses.
    std::uint64_t enumeration_budget = 4'000'000;
    std::uint64_t partition_budget = 200'000;
    AnnealingConfig anneal;
    const TransitionModel* model = nullptr; // enables the 2-gram objective
    ObjectiveWeights weights;
    std::vector<ChordId> active_alphabet;
    SearchTrace* trace_out = nullptr; // filled in anneal mode
};

namespace detail {

// Optimal W for a fixed partition + assignment: positions decompose.
inline std::vector<ChordId> clustered_best_sequence(
    const Profile& profile, const SectionPartition& partition,
    const ClusterAssignment& assignment, std::span<const ChordId> alphabet) {
    const DistanceMatrix& d = chord_distance();
    std::vector<ChordId> w(profile.length());
    for (int j = 0; j < profile.length(); ++j) {
        const int section = partition.section_of(j);
        ChordId best = alphabet.front();
        double best_cost = std::numeric_limits<double>::infinity();
        for (ChordId a : alphabet) {
            double cost = 0.0;
            for (int i = 0; i < profile.agents(); ++i) {
                const double q = assignment.section_of[i] == section
                                     ? 1.0
                                     : assignment.off_section_weight;
                cost += q * d(profile(i, j), a);
            }
            if (cost < best_cost) {
                best_cost = cost;
                best = a;
            }
        }
        w[j] = best;
    }
    return w;
}

// Best home section per agent given W: the section with the smallest summed
// distance (the off-section share of the total is assignment-independent).
inline void reassign_agents(const Profile& profile,
                            std::span<const ChordId> w,
                            const SectionPartition& partition,
                            ClusterAssignment& assignment) {
    const DistanceMatrix& d = chord_distance();
    for (int i = 0; i < profile.agents(); ++i) {
        int best_section = 0;
        double best = std::numeric_limits<double>::infinity();
        for (int s = 0; s < partition.sections(); ++s) {
            double in_section = 0.0;
            const int begin = partition.starts[s];
            const int end = s + 1 < partition.sections()
                                ? partition.starts[s + 1]
                                : profile.length();
            for (int j = begin; j < end; ++j)
                in_section += d(profile(i, j), w[j]);
            if (in_section < best) {
                best = in_section;
                best_section = s;
            }
        }
        assignment.section_of[i] = best_section;
    }
}

inline void for_each_partition(
    int k, int x_max, const std::function<void(const std::vector<int>&)>& fn) {
    for (int x = 1; x <= x_max && x <= k; ++x) {
        // starts[0] = 0 plus x-1 boundaries chosen ascending from [1, k-1]
        std::vector<int> starts(x);
        starts[0] = 0;
        for (int s = 1; s < x; ++s) starts[s] = s;
        while (true) {
            fn(starts);
            int s = x - 1;
            while (s >= 1 && starts[s] == k - x + s) --s;
            if (s < 1) break;
            ++starts[s];
            for (int t = s + 1; t < x; ++t) starts[t] = starts[t - 1] + 1;
        }
    }
}

inline std::uint64_t partition_count(int k, int x_max) {
    // sum over x of C(k-1, x-1), saturating well above any usable budget
    constexpr std::uint64_t cap = std::uint64_t(1) << 50;
    std::uint64_t total = 0;
    for (int x = 1; x <= x_max && x <= k; ++x) {
        double c = 1.0;
        for (int t = 0; t < x - 1; ++t)
            c = c * (k - 1 - t) / (t + 1);
        if (c > static_cast<double>(cap)) return cap;
        total += static_cast<std::uint64_t>(c + 0.5);
        if (total > cap) return cap;
    }
    return total;
}

} // namespace detail

// Joint search over (W, partition, assignment) minimizing the clustered
// objective; see ClusteredSolveConfig for the exact-mode strategy.
inline ClusteredSolveResult solve_clustered_kemeny(
    const Profile& profile, int x_max, double off_section_weight,
    const ClusteredSolveConfig& config = {}) {
    const int n = profile.agents();
    const int k = profile.length();
    if (x_max < 1 || x_max > n)
        throw InvalidPartitionError("x_max must be in [1, n]");

    const auto alphabet = detail::resolve_alphabet(config.active_alphabet);

    auto objective = [&](const ClusteredState& state) {
        const double base = score_clustered_kemeny(
            profile, state.w, state.partition, state.assignment);
        if (!config.model) return base;
        return config.weights.x_kc * base +
               (1.0 - config.weights.x_kc) *
                   neg_log_likelihood(*config.model, state.w);
    };

    if (config.mode == ClusteredMode::anneal) {
        ClusteredState initial;
        initial.w = solve_plurality(profile).w;
        const int sections = std::min(x_max, k);
        initial.partition.x_max = x_max;
        for (int s = 0; s < sections; ++s)
            initial.partition.starts.push_back(
                static_cast<int>(std::int64_t(s) * k / sections));
        initial.assignment.off_section_weight = off_section_weight;
        initial.assignment.section_of.assign(n, 0);
        detail::reassign_agents(profile, initial.w, initial.partition,
                                initial.assignment);

        auto neighbor = [&](const ClusteredState& s, Rng& rng) {
            return clustered_neighbor(s, rng, alphabet);
        };
        auto annealed = anneal(objective, Direction::minimize,
                               std::move(initial), neighbor, config.anneal);
        if (config.trace_out) *config.trace_out = std::move(annealed.trace);

        ClusteredSolveResult result;
        result.solution.w = std::move(annealed.best.w);
        result.partition = std::move(annealed.best.partition);
        result.assignment = std::move(annealed.best.assignment);
        result.score = annealed.best_score;
        result.solution.scores[config.model ? "clustered2" : "clustered"] =
            result.score;
        return result;
    }

    // Exact mode (base objective only; the 2-gram form does not decompose
    // per position and goes through annealing).
    if (config.model)
        throw Error("exact clustered solving does not take a 2-gram model");

    const std::uint64_t partitions = detail::partition_count(k, x_max);
    double assignments_per_partition = 1.0;
    for (int i = 0; i < n; ++i)
        assignments_per_partition *= static_cast<double>(x_max);
    const bool enumerate_assignments =
        static_cast<double>(partitions) * assignments_per_partition <=
        static_cast<double>(config.enumeration_budget);
    if (!enumerate_assignments &&
        partitions > config.partition_budget / std::uint64_t(n))
        throw BudgetExceededError(
            "clustered exact mode: " + std::to_string(partitions) +
            " partitions x " + std::to_string(n) + " agents exceeds budget");

    ClusteredSolveResult best;
    best.score = std::numeric_limits<double>::infinity();

    detail::for_each_partition(k, x_max, [&](const std::vector<int>& starts) {
        SectionPartition partition{starts, x_max};
        const int sections = partition.sections();
        ClusterAssignment assignment;
        assignment.off_section_weight = off_section_weight;
        assignment.section_of.assign(n, 0);

        auto consider = [&](const ClusterAssignment& asg) {
            auto w = detail::clustered_best_sequence(profile, partition, asg,
                                                     alphabet);
            const double score =
                score_clustered_kemeny(profile, w, partition, asg);
            if (score < best.score) {
                best.score = score;
                best.solution.w = std::move(w);
                best.partition = partition;
                best.assignment = asg;
            }
        };

        if (enumerate_assignments) {
            while (true) {
                consider(assignment);
                int i = n - 1;
                while (i >= 0 && assignment.section_of[i] == sections - 1)
                    assignment.section_of[i--] = 0;
                if (i < 0) break;
                ++assignment.section_of[i];
            }
        } else {
            // Alternate best-sequence / best-assignment to a fixed point,
            // seeded from the unweighted Kemeny solution.
            auto w = solve_kemeny(profile, alphabet).w;
            detail::reassign_agents(profile, w, partition, assignment);
            double score =
                score_clustered_kemeny(profile, w, partition, assignment);
            for (int round = 0; round < 100; ++round) {
                w = detail::clustered_best_sequence(profile, partition,
                                                    assignment, alphabet);
                detail::reassign_agents(profile, w, partition, assignment);
                const double improved =
                    score_clustered_kemeny(profile, w, partition, assignment);
                if (improved >= score - 1e-15) {
                    score = std::min(score, improved);
                    break;
                }
                score = improved;
            }
            consider(assignment);
        }
    });

    best.solution.scores["clustered"] = best.score;
    return best;
}

} // namespace harmonagg
