#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "harmonagg/chord.hpp"
#include "harmonagg/corpus.hpp"
#include "harmonagg/errors.hpp"

namespace harmonagg {

// Row-stochastic 2-gram chord-transition probabilities. probs(u, v) is the
// probability that chord v follows chord u. With smoothing alpha > 0 every
// entry is positive and every row sums to 1.
class TransitionModel {
public:
    TransitionModel() : probs_(kNumChords * kNumChords, 0.0) {}

    double operator()(ChordId from, ChordId to) const {
        return probs_[from * kNumChords + to];
    }

    std::span<const double> row(ChordId from) const {
        return {probs_.data() + from * kNumChords,
                static_cast<std::size_t>(kNumChords)};
    }

    double alpha() const { return alpha_; }
    const std::string& trained_on() const { return trained_on_; }

    static TransitionModel uniform() {
        TransitionModel m;
        m.alpha_ = 1.0;
        for (double& p : m.probs_) p = 1.0 / kNumChords;
        return m;
    }

    static TransitionModel from_matrix(std::vector<double> probs, double alpha) {
        if (probs.size() != kNumChords * kNumChords)
            throw Error("transition matrix must be 120x120");
        TransitionModel m;
        m.probs_ = std::move(probs);
        m.alpha_ = alpha;
        return m;
    }

    // Fixture helper: uniform model with selected entries overridden; the
    // remainder of each touched row is spread evenly so rows stay stochastic.
    static TransitionModel with_entries(
        const std::vector<std::tuple<ChordId, ChordId, double>>& entries) {
        TransitionModel m = uniform();
        for (auto& [from, to, p] : entries) {
            const double rest = (1.0 - p) / (kNumChords - 1);
            for (int v = 0; v < kNumChords; ++v)
                m.probs_[from * kNumChords + v] = (v == to) ? p : rest;
        }
        return m;
    }

    friend TransitionModel train(const Corpus&, double, bool);
    friend TransitionModel load_model(std::istream&);

private:
    std::vector<double> probs_;
    double alpha_ = 0.0;
    std::string trained_on_;
};

namespace detail {

inline std::string corpus_fingerprint(const Corpus& corpus) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto eat = [&h](std::uint64_t x) {
        for (int i = 0; i < 8; ++i) {
            h ^= (x >> (8 * i)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    };
    eat(corpus.songs.size());
    for (const auto& song : corpus.songs) {
        eat(song.normalized.size());
        for (ChordId id : song.normalized) eat(static_cast<std::uint64_t>(id));
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%zu-songs-%016llx", corpus.songs.size(),
                  static_cast<unsigned long long>(h));
    return buf;
}

} // namespace detail

// Count consecutive pairs within each normalized song (never across songs)
// and apply additive smoothing:
//   p(v | u) = (count(u->v) + alpha) / (count(u->.) + 120 * alpha).
// With alpha = 0 a chord that never occurs as a predecessor leaves a row
// without a distribution; that raises unless allow_zero_rows.
inline TransitionModel train(const Corpus& corpus, double smoothing_alpha,
                             bool allow_zero_rows = false) {
    if (corpus.songs.empty()) throw EmptyCorpusError();

    std::vector<std::uint64_t> counts(kNumChords * kNumChords, 0);
    std::vector<std::uint64_t> row_totals(kNumChords, 0);
    for (const auto& song : corpus.songs) {
        for (std::size_t j = 0; j + 1 < song.normalized.size(); ++j) {
            const ChordId u = song.normalized[j];
            const ChordId v = song.normalized[j + 1];
            ++counts[u * kNumChords + v];
            ++row_totals[u];
        }
    }

    TransitionModel model;
    model.alpha_ = smoothing_alpha;
    model.trained_on_ = detail::corpus_fingerprint(corpus);
    for (int u = 0; u < kNumChords; ++u) {
        const double denom =
            static_cast<double>(row_totals[u]) + kNumChords * smoothing_alpha;
        if (denom == 0.0) {
            if (!allow_zero_rows) throw DegenerateRowError(u);
            continue; // row stays all-zero
        }
        for (int v = 0; v < kNumChords; ++v)
            model.probs_[u * kNumChords + v] =
                (static_cast<double>(counts[u * kNumChords + v]) +
                 smoothing_alpha) /
                denom;
    }
    return model;
}

// G(W) = -sum over consecutive pairs of ln p(W[j] -> W[j+1]).
// Natural log; a sequence with fewer than two chords has no transitions.
inline double neg_log_likelihood(const TransitionModel& model,
                                 std::span<const ChordId> w) {
    double g = 0.0;
    for (std::size_t j = 0; j + 1 < w.size(); ++j) {
        const double p = model(w[j], w[j + 1]);
        if (p <= 0.0) throw ZeroProbabilityTransitionError(w[j], w[j + 1]);
        g -= std::log(p);
    }
    return g;
}

inline constexpr int kModelFileVersion = 1;

inline void save_model(const TransitionModel& model, std::ostream& out) {
    nlohmann::json j;
    j["version"] = kModelFileVersion;
    j["alphabet_hash"] = alphabet_hash();
    j["alpha"] = model.alpha();
    auto rows = nlohmann::json::array();
    for (int u = 0; u < kNumChords; ++u) {
        auto row = nlohmann::json::array();
        for (double p : model.row(u)) row.push_back(p);
        rows.push_back(std::move(row));
    }
    j["probs"] = std::move(rows);
    out << j.dump() << '\n';
}

inline void save_model(const TransitionModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write model file: " + path);
    save_model(model, out);
}

inline TransitionModel load_model(std::istream& in) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ChecksumError(std::string("model file is not valid JSON: ") +
                            e.what());
    }
    if (!j.contains("version") || !j.contains("alphabet_hash") ||
        !j.contains("alpha") || !j.contains("probs"))
        throw ChecksumError("model file is missing required fields");
    if (j["version"].get<int>() != kModelFileVersion)
        throw VersionMismatchError("unsupported model file version");
    if (j["alphabet_hash"].get<std::string>() != alphabet_hash())
        throw VersionMismatchError("model was built for a different alphabet");

    const auto& rows = j["probs"];
    if (!rows.is_array() || rows.size() != kNumChords)
        throw ChecksumError("model probs must hold 120 rows");
    TransitionModel model;
    model.alpha_ = j["alpha"].get<double>();
    for (int u = 0; u < kNumChords; ++u) {
        const auto& row = rows[u];
        if (!row.is_array() || row.size() != kNumChords)
            throw ChecksumError("model row " + std::to_string(u) +
                                " must hold 120 entries");
        for (int v = 0; v < kNumChords; ++v)
            model.probs_[u * kNumChords + v] = row[v].get<double>();
    }
    return model;
}

inline TransitionModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open model file: " + path);
    return load_model(in);
}

} // namespace harmonagg
