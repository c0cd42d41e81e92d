#pragma once

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "harmonagg/annealing.hpp"
#include "harmonagg/chord.hpp"
#include "harmonagg/corpus.hpp"
#include "harmonagg/errors.hpp"
#include "harmonagg/objectives.hpp"
#include "harmonagg/profile.hpp"
#include "harmonagg/rng.hpp"
#include "harmonagg/solvers.hpp"
#include "harmonagg/transition_model.hpp"

namespace harmonagg {

// Perturbation intensity label (a, b); mapped to a per-position replacement
// probability q drawn uniformly from [a/4, b/4] for each agent.
struct ErrorRange {
    double lo = 0.0;
    double hi = 1.0;

    ErrorRange() = default;
    ErrorRange(double lo_, double hi_) : lo(lo_), hi(hi_) {
        if (!(0.0 <= lo && lo < hi && hi <= 4.0))
            throw Error("error range needs 0 <= lo < hi <= 4");
    }
};

// One agent's variation of a song: each position is independently replaced
// with probability q; the replacement is drawn from the other chords with
// probability proportional to 1 - d(original, candidate), uniformly if all
// such weights vanish.
inline std::vector<ChordId> perturb(std::span<const ChordId> song,
                                    const ErrorRange& range, Rng& rng) {
    const DistanceMatrix& d = chord_distance();
    const double q = uniform_real(rng, range.lo / 4.0, range.hi / 4.0);
    std::vector<ChordId> out(song.begin(), song.end());
    std::vector<double> weights(kNumChords);
    for (ChordId& chord : out) {
        if (uniform01(rng) >= q) continue;
        double total = 0.0;
        for (ChordId c = 0; c < kNumChords; ++c) {
            weights[c] = c == chord ? 0.0 : 1.0 - d(chord, c);
            total += weights[c];
        }
        if (total > 0.0) {
            chord = static_cast<ChordId>(weighted_index(rng, weights, total));
        } else {
            ChordId pick = static_cast<ChordId>(bounded(rng, kNumChords - 1));
            chord = pick >= chord ? pick + 1 : pick;
        }
    }
    return out;
}

inline Profile make_profile(std::span<const ChordId> song, int n,
                            const ErrorRange& range, Rng& rng) {
    Profile profile(n, static_cast<int>(song.size()));
    for (int i = 0; i < n; ++i) {
        const auto row = perturb(song, range, rng);
        for (int j = 0; j < profile.length(); ++j) profile(i, j) = row[j];
    }
    return profile;
}

struct SimilarityScore {
    double sum = 0.0;
    double mean = 0.0;
};

// Position-wise Jaccard distance between the aggregate and the original.
inline SimilarityScore song_similarity(std::span<const ChordId> w,
                                       std::span<const ChordId> original) {
    if (w.size() != original.size())
        throw LengthMismatchError(original.size(), w.size());
    const DistanceMatrix& d = chord_distance();
    SimilarityScore s;
    for (std::size_t j = 0; j < w.size(); ++j) s.sum += d(w[j], original[j]);
    s.mean = s.sum / static_cast<double>(w.size());
    return s;
}

// Mean distance over all sliding 17-position windows and agents.
inline double cluster_coherence(const Profile& profile,
                                std::span<const ChordId> w) {
    const int k = profile.length();
    if (static_cast<int>(w.size()) != k)
        throw LengthMismatchError(k, w.size());
    if (k <= 16)
        throw SequenceTooShortError(
            "cluster coherence needs more than 16 positions, got " +
            std::to_string(k));
    const DistanceMatrix& d = chord_distance();
    double total = 0.0;
    for (int i = 0; i < profile.agents(); ++i)
        for (int j = 0; j + 16 < k; ++j)
            for (int t = j; t <= j + 16; ++t)
                total += d(w[t], profile(i, t));
    return total / (static_cast<double>(k - 16) * profile.agents());
}

// Geometric-mean transition probability, exp(-G(W) / (k - 1)); higher means
// the sequence flows more naturally under the model.
inline double musical_coherence(const TransitionModel& model,
                                std::span<const ChordId> w) {
    if (w.size() < 2) throw LengthMismatchError(2, w.size());
    return std::exp(-neg_log_likelihood(model, w) /
                    static_cast<double>(w.size() - 1));
}

struct CellMetrics {
    std::string song_id;
    Rule rule{};
    ErrorRange range;
    int n_agents = 0;
    double song_similarity_sum = 0.0;
    double song_similarity_mean = 0.0;
    double cluster_coherence = 0.0;
    double musical_coherence = 0.0;
    std::int64_t wall_ms = 0;
    std::uint64_t seed = 0;
};

struct ExperimentConfig {
    Corpus songs; // simulation set; every song must normalize to 64 chords
    std::vector<int> agent_counts{8};
    std::vector<ErrorRange> error_ranges;
    std::vector<Rule> rules;
    ObjectiveWeights weights;
    AnnealingConfig anneal; // per-cell seeds are derived, .seed is ignored
    std::uint64_t seed = 0;
    int x_max = 8; // clustered rules; capped at the agent count
    double off_section_weight = 0.0;
    int threads = 0;           // 0 = hardware, capped by HARMONAGG_THREADS
    bool record_timing = false; // off keeps reruns byte-identical
    std::function<void(const CellMetrics&)> on_cell; // progress hook
};

struct CellAverage {
    Rule rule{};
    ErrorRange range;
    int n_agents = 0;
    std::size_t songs = 0;
    double song_similarity_sum = 0.0;
    double song_similarity_mean = 0.0;
    double cluster_coherence = 0.0;
    double musical_coherence = 0.0;
};

struct MetricsReport {
    std::vector<CellMetrics> cells; // canonical (song, n, range, rule) order
    std::vector<std::string> failures;

    // Per (rule, range, n) means over songs, in first-seen canonical order.
    std::vector<CellAverage> averages() const {
        std::vector<CellAverage> out;
        for (const auto& cell : cells) {
            CellAverage* slot = nullptr;
            for (auto& avg : out)
                if (avg.rule == cell.rule && avg.n_agents == cell.n_agents &&
                    avg.range.lo == cell.range.lo &&
                    avg.range.hi == cell.range.hi) {
                    slot = &avg;
                    break;
                }
            if (!slot) {
                out.push_back({cell.rule, cell.range, cell.n_agents, 0, 0.0,
                               0.0, 0.0, 0.0});
                slot = &out.back();
            }
            ++slot->songs;
            slot->song_similarity_sum += cell.song_similarity_sum;
            slot->song_similarity_mean += cell.song_similarity_mean;
            slot->cluster_coherence += cell.cluster_coherence;
            slot->musical_coherence += cell.musical_coherence;
        }
        for (auto& avg : out) {
            const double c = static_cast<double>(avg.songs);
            avg.song_similarity_sum /= c;
            avg.song_similarity_mean /= c;
            avg.cluster_coherence /= c;
            avg.musical_coherence /= c;
        }
        return out;
    }
};

inline int resolve_thread_count(int requested) {
    int threads = requested > 0
                      ? requested
                      : static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    if (const char* cap = std::getenv("HARMONAGG_THREADS")) {
        const int limit = std::atoi(cap);
        if (limit >= 1 && threads > limit) threads = limit;
    }
    return threads;
}

namespace detail {

inline Solution solve_rule(Rule rule, const Profile& profile,
                           const ExperimentConfig& config,
                           const TransitionModel& model, std::uint64_t seed) {
    AnnealingConfig anneal = config.anneal;
    anneal.seed = seed;
    const int x_max = std::min(config.x_max, profile.agents());
    switch (rule) {
        case Rule::plurality:
            return solve_plurality(profile);
        case Rule::kemeny:
            return solve_kemeny(profile);
        case Rule::pav:
            return solve_pav(profile, config.weights, nullptr, anneal);
        case Rule::pav2:
            return solve_pav(profile, config.weights, &model, anneal);
        case Rule::plurality2:
            return solve_plurality_2gram_dp(profile, config.weights, model);
        case Rule::kemeny2:
            return solve_kemeny_2gram_dp(profile, config.weights, model);
        case Rule::clustered:
        case Rule::clustered2: {
            ClusteredSolveConfig cfg;
            cfg.mode = ClusteredMode::anneal;
            cfg.anneal = anneal;
            cfg.weights = config.weights;
            if (rule == Rule::clustered2) cfg.model = &model;
            return solve_clustered_kemeny(profile, x_max,
                                          config.off_section_weight, cfg)
                .solution;
        }
    }
    throw Error("unhandled rule");
}

} // namespace detail

// Runs every (song, agent count, error range, rule) cell: perturbs the song
// into a profile, solves, and evaluates the three metrics. The profile for a
// cell depends only on (seed, song, n, range), so all rules of a cell see
// the same agents and results are independent of scheduling.
inline MetricsReport run_experiment(const ExperimentConfig& config,
                                    const TransitionModel& model) {
    if (config.songs.songs.empty()) throw EmptyCorpusError();
    for (const auto& song : config.songs.songs)
        if (song.normalized.size() != 64)
            throw Error("simulation songs must normalize to 64 chords: '" +
                        song.title + "'");

    struct CellKey {
        std::size_t song, n, range, rule;
    };
    std::vector<CellKey> keys;
    for (std::size_t s = 0; s < config.songs.songs.size(); ++s)
        for (std::size_t n = 0; n < config.agent_counts.size(); ++n)
            for (std::size_t r = 0; r < config.error_ranges.size(); ++r)
                for (std::size_t a = 0; a < config.rules.size(); ++a)
                    keys.push_back({s, n, r, a});

    std::vector<std::optional<CellMetrics>> slots(keys.size());
    std::vector<std::string> failures(keys.size());
    std::atomic<std::size_t> cursor{0};
    std::mutex progress_mutex;

    auto worker = [&]() {
        while (true) {
            const std::size_t idx = cursor.fetch_add(1);
            if (idx >= keys.size()) return;
            const CellKey key = keys[idx];
            const Song& song = config.songs.songs[key.song];
            const int n = config.agent_counts[key.n];
            const ErrorRange range = config.error_ranges[key.range];
            const Rule rule = config.rules[key.rule];
            try {
                Rng profile_rng(
                    derive_seed(config.seed, 1, key.song, key.n, key.range));
                Profile profile =
                    make_profile(song.normalized, n, range, profile_rng);
                const std::uint64_t solver_seed = derive_seed(
                    config.seed, 2, key.song, key.n, key.range, key.rule);

                const auto started = std::chrono::steady_clock::now();
                Solution solution = detail::solve_rule(rule, profile, config,
                                                       model, solver_seed);
                const auto elapsed =
                    std::chrono::steady_clock::now() - started;

                CellMetrics cell;
                cell.song_id = song.title;
                cell.rule = rule;
                cell.range = range;
                cell.n_agents = n;
                const auto sim =
                    song_similarity(solution.w, song.normalized);
                cell.song_similarity_sum = sim.sum;
                cell.song_similarity_mean = sim.mean;
                cell.cluster_coherence = cluster_coherence(profile, solution.w);
                cell.musical_coherence = musical_coherence(model, solution.w);
                cell.wall_ms =
                    config.record_timing
                        ? std::chrono::duration_cast<std::chrono::milliseconds>(
                              elapsed)
                              .count()
                        : 0;
                cell.seed = solver_seed;
                if (config.on_cell) {
                    std::lock_guard<std::mutex> lock(progress_mutex);
                    config.on_cell(cell);
                }
                slots[idx] = std::move(cell);
            } catch (const std::exception& e) {
                failures[idx] = "cell (" + song.title + ", n=" +
                                std::to_string(n) + ", range=(" +
                                std::to_string(range.lo) + "," +
                                std::to_string(range.hi) + "), " +
                                std::string(rule_name(rule)) + "): " + e.what();
            }
        }
    };

    const int threads =
        std::min<int>(resolve_thread_count(config.threads),
                      static_cast<int>(keys.size()));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    MetricsReport report;
    for (std::size_t idx = 0; idx < keys.size(); ++idx) {
        if (slots[idx])
            report.cells.push_back(std::move(*slots[idx]));
        else
            report.failures.push_back(std::move(failures[idx]));
    }
    return report;
}

namespace detail {

inline std::string csv_number(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

inline std::string csv_field(const std::string& raw) {
    if (raw.find_first_of(",\"\n") == std::string::npos) return raw;
    std::string quoted = "\"";
    for (char ch : raw) {
        if (ch == '"') quoted += '"';
        quoted += ch;
    }
    quoted += '"';
    return quoted;
}

} // namespace detail

// RFC-4180 rows, shortest round-trip number formatting, canonical order.
inline void write_metrics_csv(const MetricsReport& report, std::ostream& out) {
    out << "song_id,rule,error_lo,error_hi,n_agents,song_similarity_sum,"
           "song_similarity_mean,cluster_coherence,musical_coherence,"
           "wall_ms,seed\n";
    for (const auto& cell : report.cells) {
        out << detail::csv_field(cell.song_id) << ',' << rule_name(cell.rule)
            << ',' << detail::csv_number(cell.range.lo) << ','
            << detail::csv_number(cell.range.hi) << ',' << cell.n_agents << ','
            << detail::csv_number(cell.song_similarity_sum) << ','
            << detail::csv_number(cell.song_similarity_mean) << ','
            << detail::csv_number(cell.cluster_coherence) << ','
            << detail::csv_number(cell.musical_coherence) << ','
            << cell.wall_ms << ',' << cell.seed << '\n';
    }
}

} // namespace harmonagg
