#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "harmonagg/chord.hpp"
#include "harmonagg/errors.hpp"
#include "harmonagg/profile.hpp"
#include "harmonagg/transition_model.hpp"

namespace harmonagg {

enum class Rule {
    plurality,
    kemeny,
    pav,
    clustered,
    plurality2,
    kemeny2,
    pav2,
    clustered2,
};

inline constexpr std::array<std::string_view, 8> kRuleNames{
    "plurality", "kemeny", "pav", "clustered",
    "plurality2", "kemeny2", "pav2", "clustered2",
};

inline std::string_view rule_name(Rule r) {
    return kRuleNames[static_cast<int>(r)];
}

inline std::optional<Rule> rule_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kRuleNames.size(); ++i)
        if (kRuleNames[i] == name) return static_cast<Rule>(i);
    return std::nullopt;
}

inline bool uses_2gram(Rule r) { return static_cast<int>(r) >= 4; }

// Plurality and PAV families are maximized; Kemeny families are minimized.
inline bool is_maximizing(Rule r) {
    switch (r) {
        case Rule::plurality:
        case Rule::plurality2:
        case Rule::pav:
        case Rule::pav2:
            return true;
        default:
            return false;
    }
}

// sat(i, W): sum of per-position Jaccard distances between agent i's row and
// W. Lower means the agent's suggestion is closer to the aggregate.
inline double satisfaction(const Profile& profile, int agent,
                           std::span<const ChordId> w) {
    if (static_cast<int>(w.size()) != profile.length())
        throw LengthMismatchError(profile.length(), w.size());
    const DistanceMatrix& d = chord_distance();
    double total = 0.0;
    for (int j = 0; j < profile.length(); ++j)
        total += d(profile(agent, j), w[j]);
    return total;
}

// M(W): exact agreement count over all agents and positions.
inline long score_plurality(const Profile& profile,
                            std::span<const ChordId> w) {
    if (static_cast<int>(w.size()) != profile.length())
        throw LengthMismatchError(profile.length(), w.size());
    long matches = 0;
    for (int i = 0; i < profile.agents(); ++i)
        for (int j = 0; j < profile.length(); ++j)
            if (profile(i, j) == w[j]) ++matches;
    return matches;
}

// K(W): cumulative Jaccard distance over all agents and positions.
inline double score_kemeny(const Profile& profile, std::span<const ChordId> w) {
    if (static_cast<int>(w.size()) != profile.length())
        throw LengthMismatchError(profile.length(), w.size());
    const DistanceMatrix& d = chord_distance();
    double total = 0.0;
    for (int i = 0; i < profile.agents(); ++i)
        for (int j = 0; j < profile.length(); ++j)
            total += d(profile(i, j), w[j]);
    return total;
}

// P(W): per agent, utilities 1 - d sorted descending and weighted by the
// harmonic series, summed over agents.
inline double score_pav(const Profile& profile, std::span<const ChordId> w) {
    if (static_cast<int>(w.size()) != profile.length())
        throw LengthMismatchError(profile.length(), w.size());
    const DistanceMatrix& d = chord_distance();
    const int k = profile.length();
    std::vector<double> utilities(k);
    double total = 0.0;
    for (int i = 0; i < profile.agents(); ++i) {
        for (int j = 0; j < k; ++j)
            utilities[j] = 1.0 - d(profile(i, j), w[j]);
        std::sort(utilities.begin(), utilities.end(), std::greater<>());
        for (int j = 0; j < k; ++j) total += utilities[j] / (j + 1);
    }
    return total;
}

// Contiguous partition of positions [0, k) into at most x_max sections.
// starts[s] is the first position of section s; starts[0] == 0.
struct SectionPartition {
    std::vector<int> starts;
    int x_max = 1;

    int sections() const { return static_cast<int>(starts.size()); }

    // Section of position j, by linear scan (sections are few).
    int section_of(int pos) const {
        int s = sections() - 1;
        while (s > 0 && starts[s] > pos) --s;
        return s;
    }

    void validate(int k, int n) const {
        if (starts.empty() || starts.front() != 0)
            throw InvalidPartitionError("partition must start at position 0");
        for (std::size_t s = 1; s < starts.size(); ++s)
            if (starts[s] <= starts[s - 1])
                throw InvalidPartitionError(
                    "section starts must be strictly increasing");
        if (starts.back() >= k)
            throw InvalidPartitionError("section start beyond sequence end");
        if (sections() > x_max)
            throw InvalidPartitionError("more sections than x_max");
        if (x_max > n)
            throw InvalidPartitionError("x_max exceeds the agent count");
    }
};

// Each agent lives in one home section; chords outside it count with weight
// off_section_weight (the diminished attention an agent pays elsewhere).
struct ClusterAssignment {
    std::vector<int> section_of; // agent -> section
    double off_section_weight = 0.0;
};

// KC(W): assignment-weighted cumulative distance.
inline double score_clustered_kemeny(const Profile& profile,
                                     std::span<const ChordId> w,
                                     const SectionPartition& partition,
                                     const ClusterAssignment& assignment) {
    if (static_cast<int>(w.size()) != profile.length())
        throw LengthMismatchError(profile.length(), w.size());
    partition.validate(profile.length(), profile.agents());
    if (static_cast<int>(assignment.section_of.size()) != profile.agents())
        throw UnassignedAgentError(
            static_cast<int>(assignment.section_of.size()));
    for (int i = 0; i < profile.agents(); ++i)
        if (assignment.section_of[i] < 0 ||
            assignment.section_of[i] >= partition.sections())
            throw UnassignedAgentError(i);

    const DistanceMatrix& d = chord_distance();
    double total = 0.0;
    for (int j = 0; j < profile.length(); ++j) {
        const int section = partition.section_of(j);
        for (int i = 0; i < profile.agents(); ++i) {
            const double q = assignment.section_of[i] == section
                                 ? 1.0
                                 : assignment.off_section_weight;
            total += q * d(profile(i, j), w[j]);
        }
    }
    return total;
}

// Canonical penalty form of the 2-gram variants. G(W) >= 0 penalizes
// improbable transitions: added under minimization, subtracted under
// maximization.
inline double combined_plurality2(const Profile& profile,
                                  std::span<const ChordId> w,
                                  const ObjectiveWeights& weights,
                                  const TransitionModel& model) {
    return weights.x_m * static_cast<double>(score_plurality(profile, w)) -
           (1.0 - weights.x_m) * neg_log_likelihood(model, w);
}

inline double combined_kemeny2(const Profile& profile,
                               std::span<const ChordId> w,
                               const ObjectiveWeights& weights,
                               const TransitionModel& model) {
    return weights.x_k * score_kemeny(profile, w) +
           (1.0 - weights.x_k) * neg_log_likelihood(model, w);
}

inline double combined_pav2(const Profile& profile, std::span<const ChordId> w,
                            const ObjectiveWeights& weights,
                            const TransitionModel& model) {
    return weights.x_p * score_pav(profile, w) -
           (1.0 - weights.x_p) * neg_log_likelihood(model, w);
}

inline double combined_clustered2(const Profile& profile,
                                  std::span<const ChordId> w,
                                  const SectionPartition& partition,
                                  const ClusterAssignment& assignment,
                                  const ObjectiveWeights& weights,
                                  const TransitionModel& model) {
    return weights.x_kc *
               score_clustered_kemeny(profile, w, partition, assignment) +
           (1.0 - weights.x_kc) * neg_log_likelihood(model, w);
}

// Dispatcher for the per-sequence rules. Clustered rules carry partition
// state and use the dedicated overload above.
inline double combined_objective(Rule rule, const Profile& profile,
                                 std::span<const ChordId> w,
                                 const ObjectiveWeights& weights,
                                 const TransitionModel& model) {
    switch (rule) {
        case Rule::plurality2:
            return combined_plurality2(profile, w, weights, model);
        case Rule::kemeny2:
            return combined_kemeny2(profile, w, weights, model);
        case Rule::pav2:
            return combined_pav2(profile, w, weights, model);
        default:
            throw Error("combined_objective: rule has no 2-gram form here");
    }
}

} // namespace harmonagg
