#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "harmonagg/chord.hpp"
#include "harmonagg/corpus.hpp"
#include "harmonagg/errors.hpp"

namespace harmonagg {

// The n x k matrix of agent chord choices; entry (i, j) is the chord agent i
// picked for position j.
class Profile {
public:
    Profile(int n, int k) : n_(n), k_(k), data_(std::size_t(n) * k, 0) {
        if (n < 1 || k < 1) throw Error("profile needs n >= 1 and k >= 1");
    }

    explicit Profile(const std::vector<std::vector<ChordId>>& rows)
        : Profile(static_cast<int>(rows.size()),
                  rows.empty() ? 0 : static_cast<int>(rows.front().size())) {
        for (int i = 0; i < n_; ++i) {
            if (static_cast<int>(rows[i].size()) != k_)
                throw LengthMismatchError(k_, rows[i].size());
            for (int j = 0; j < k_; ++j) (*this)(i, j) = rows[i][j];
        }
    }

    int agents() const { return n_; }
    int length() const { return k_; }

    ChordId& operator()(int agent, int pos) {
        return data_[std::size_t(agent) * k_ + pos];
    }
    ChordId operator()(int agent, int pos) const {
        return data_[std::size_t(agent) * k_ + pos];
    }

    std::span<const ChordId> row(int agent) const {
        return {data_.data() + std::size_t(agent) * k_,
                static_cast<std::size_t>(k_)};
    }

    friend bool operator==(const Profile&, const Profile&) = default;

private:
    int n_;
    int k_;
    std::vector<ChordId> data_;
};

// A candidate aggregated sequence plus whatever objective values were
// computed for it along the way.
struct Solution {
    std::vector<ChordId> w;
    std::map<std::string, double> scores;

    int length() const { return static_cast<int>(w.size()); }
};

// Mixing weights for the 2-gram objective variants; x = 1 collapses each
// combined objective to its base rule.
struct ObjectiveWeights {
    double x_m = 0.5;
    double x_k = 0.9;
    double x_p = 1.0 - 2e-4;
    double x_kc = 0.9;
};

// Profile file format: header `k=<int> n=<int>`, then n lines of k
// whitespace-separated chord symbols. `#` lines are comments.
inline Profile load_profile(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    int n = -1, k = -1;
    std::vector<std::vector<ChordId>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = detail::trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        if (n < 0) {
            if (std::sscanf(stripped.c_str(), "k=%d n=%d", &k, &n) != 2 ||
                n < 1 || k < 1)
                throw FormatError("expected header 'k=<int> n=<int>'", line_no);
            continue;
        }
        auto symbols = detail::split_ws(stripped);
        if (static_cast<int>(symbols.size()) != k)
            throw FormatError("expected " + std::to_string(k) +
                                  " chords, got " +
                                  std::to_string(symbols.size()),
                              line_no);
        std::vector<ChordId> row;
        row.reserve(k);
        for (const auto& sym : symbols) {
            auto chord = try_parse_chord(sym);
            if (!chord)
                throw FormatError("unknown chord symbol '" + sym + "'",
                                  line_no);
            row.push_back(chord_id(*chord));
        }
        rows.push_back(std::move(row));
        if (static_cast<int>(rows.size()) == n) break;
    }
    if (n < 0) throw FormatError("missing profile header", line_no);
    if (static_cast<int>(rows.size()) != n)
        throw FormatError("expected " + std::to_string(n) + " agent rows, got " +
                              std::to_string(rows.size()),
                          line_no);
    return Profile(rows);
}

inline Profile load_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open profile file: " + path);
    return load_profile(in);
}

inline void save_profile(const Profile& profile, std::ostream& out) {
    out << "k=" << profile.length() << " n=" << profile.agents() << '\n';
    for (int i = 0; i < profile.agents(); ++i) {
        for (int j = 0; j < profile.length(); ++j) {
            if (j) out << ' ';
            out << format_chord(profile(i, j));
        }
        out << '\n';
    }
}

inline std::string format_sequence(std::span<const ChordId> w) {
    std::string out;
    for (std::size_t j = 0; j < w.size(); ++j) {
        if (j) out += ' ';
        out += format_chord(w[j]);
    }
    return out;
}

} // namespace harmonagg
