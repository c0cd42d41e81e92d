#pragma once

#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "harmonagg/chord.hpp"
#include "harmonagg/errors.hpp"

namespace harmonagg {

// One corpus song. Bars hold 1-2 chords as written; `normalized` duplicates
// single-chord bars so every bar contributes exactly two chords.
struct Song {
    std::string title;
    std::vector<std::vector<ChordId>> bars;
    std::vector<ChordId> normalized;

    int bar_count() const { return static_cast<int>(bars.size()); }
};

struct CorpusStats {
    std::size_t parsed = 0;         // songs successfully ingested
    std::size_t skipped = 0;        // songs dropped under the skip policy
    std::size_t normalized_64 = 0;  // parsed songs of exactly 32 bars
};

struct Corpus {
    std::vector<Song> songs;
    CorpusStats stats;
};

enum class UnknownChordPolicy {
    skip,   // drop the offending song, count it
    strict, // raise
};

namespace detail {

inline std::vector<std::string> split_fields(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

inline std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

} // namespace detail

// Corpus text format: one song per line, `title | bar | bar | ...`, each bar
// holding 1-2 whitespace-separated chord symbols. Lines starting with `#`
// are comments.
inline Corpus load_corpus(std::istream& in,
                          UnknownChordPolicy policy = UnknownChordPolicy::skip) {
    Corpus corpus;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = detail::trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;

        auto fields = detail::split_fields(stripped, '|');
        if (fields.size() < 2)
            throw CorpusFormatError("expected 'title | bar | ...'", line_no);

        Song song;
        song.title = detail::trim(fields[0]);
        bool ok = true;
        for (std::size_t f = 1; f < fields.size() && ok; ++f) {
            auto symbols = detail::split_ws(fields[f]);
            if (symbols.empty() || symbols.size() > 2) {
                if (policy == UnknownChordPolicy::strict)
                    throw CorpusFormatError(
                        "bar must hold 1 or 2 chords, got " +
                            std::to_string(symbols.size()),
                        line_no);
                ok = false;
                break;
            }
            std::vector<ChordId> bar;
            for (const auto& sym : symbols) {
                auto chord = try_parse_chord(sym);
                if (!chord) {
                    if (policy == UnknownChordPolicy::strict)
                        throw UnknownChordError(sym);
                    ok = false;
                    break;
                }
                bar.push_back(chord_id(*chord));
            }
            if (ok) song.bars.push_back(std::move(bar));
        }
        if (!ok) {
            ++corpus.stats.skipped;
            continue;
        }
        for (const auto& bar : song.bars) {
            song.normalized.push_back(bar.front());
            song.normalized.push_back(bar.back());
        }
        ++corpus.stats.parsed;
        if (song.bar_count() == 32) ++corpus.stats.normalized_64;
        corpus.songs.push_back(std::move(song));
    }
    return corpus;
}

inline Corpus load_corpus(const std::string& path,
                          UnknownChordPolicy policy = UnknownChordPolicy::skip) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open corpus file: " + path);
    return load_corpus(in, policy);
}

// Simulation set: only songs of exactly 32 bars (normalized length 64).
inline Corpus filter_simulation_set(const Corpus& corpus) {
    Corpus out;
    out.stats = corpus.stats;
    for (const auto& song : corpus.songs)
        if (song.normalized.size() == 64) out.songs.push_back(song);
    return out;
}

} // namespace harmonagg
