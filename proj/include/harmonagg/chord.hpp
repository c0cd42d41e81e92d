#pragma once

#include <array>
#include <bit>
#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "harmonagg/errors.hpp"

namespace harmonagg {

// Semitone class in [0, 11], C = 0. Enharmonic spellings coincide.
using PitchClass = int;

inline constexpr int kNumPitchClasses = 12;
inline constexpr int kNumQualities = 10;
inline constexpr int kNumChords = 120; // 12 roots x 10 qualities
inline constexpr int kNotesPerChord = 4;

using ChordId = int;

enum class Quality : int {
    maj7 = 0,
    m7,
    mMaj7,
    dom7,
    dimMaj7,
    dim7,
    m7b5,
    m6,
    aug7,
    augMaj7,
};

namespace detail {

// Semitone offsets from the root, four notes per quality.
inline constexpr std::array<std::array<int, kNotesPerChord>, kNumQualities>
    kQualityIntervals{{
        {0, 4, 7, 11},  // maj7
        {0, 3, 7, 10},  // m7
        {0, 3, 7, 11},  // mMaj7
        {0, 4, 7, 10},  // dom7
        {0, 3, 6, 11},  // dimMaj7
        {0, 3, 6, 9},   // dim7
        {0, 3, 6, 10},  // m7b5
        {0, 3, 7, 9},   // m6
        {0, 4, 8, 10},  // aug7
        {0, 4, 8, 11},  // augMaj7
    }};

inline constexpr std::array<std::string_view, kNumQualities> kQualitySuffix{
    "Maj7", "m7", "mMaj7", "7", "dimMaj7",
    "dim7", "m7b5", "m6", "+7", "+maj7",
};

// Canonical root spellings use flats.
inline constexpr std::array<std::string_view, kNumPitchClasses> kRootName{
    "C", "Db", "D", "Eb", "E", "F", "Gb", "G", "Ab", "A", "Bb", "B",
};

} // namespace detail

struct Chord {
    PitchClass root{};
    Quality quality{};

    friend constexpr bool operator==(Chord, Chord) = default;
};

// The 4 pitch classes of a chord, packed as a 12-bit mask.
class NoteSet {
public:
    constexpr NoteSet() = default;
    constexpr explicit NoteSet(std::uint16_t mask) : mask_(mask) {}

    constexpr std::uint16_t mask() const { return mask_; }
    constexpr bool contains(PitchClass pc) const {
        return (mask_ >> pc) & 1u;
    }
    constexpr int size() const { return std::popcount(mask_); }

    constexpr std::array<PitchClass, kNotesPerChord> pitches() const {
        std::array<PitchClass, kNotesPerChord> out{};
        int n = 0;
        for (int pc = 0; pc < kNumPitchClasses; ++pc)
            if (contains(pc)) out[n++] = pc;
        return out;
    }

    friend constexpr bool operator==(NoteSet, NoteSet) = default;

private:
    std::uint16_t mask_ = 0;
};

constexpr NoteSet note_set(Chord c) {
    std::uint16_t mask = 0;
    for (int offset : detail::kQualityIntervals[static_cast<int>(c.quality)])
        mask |= static_cast<std::uint16_t>(1u << ((c.root + offset) % 12));
    return NoteSet(mask);
}

// Alphabet order: root-major (C, Db, ..., B), quality-minor.
constexpr ChordId chord_id(Chord c) {
    return c.root * kNumQualities + static_cast<int>(c.quality);
}

constexpr Chord chord_from_id(ChordId id) {
    return Chord{id / kNumQualities, static_cast<Quality>(id % kNumQualities)};
}

constexpr NoteSet note_set(ChordId id) { return note_set(chord_from_id(id)); }

inline std::string format_chord(Chord c) {
    std::string s{detail::kRootName[c.root]};
    s += detail::kQualitySuffix[static_cast<int>(c.quality)];
    return s;
}

inline std::string format_chord(ChordId id) {
    return format_chord(chord_from_id(id));
}

namespace detail {

constexpr int letter_pitch(char letter) {
    switch (letter) {
        case 'C': return 0;
        case 'D': return 2;
        case 'E': return 4;
        case 'F': return 5;
        case 'G': return 7;
        case 'A': return 9;
        case 'B': return 11;
        default: return -1;
    }
}

inline std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& ch : out)
        ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return out;
}

} // namespace detail

// Root letters are case-sensitive; quality suffixes are matched
// case-insensitively. Sharp spellings map onto the flat canonical roots.
inline std::optional<Chord> try_parse_chord(std::string_view symbol) {
    if (symbol.empty()) return std::nullopt;
    int root = detail::letter_pitch(symbol[0]);
    if (root < 0) return std::nullopt;
    std::string_view rest = symbol.substr(1);
    if (!rest.empty() && (rest[0] == 'b' || rest[0] == '#')) {
        root = (root + (rest[0] == 'b' ? 11 : 1)) % 12;
        rest = rest.substr(1);
    }
    const std::string suffix = detail::ascii_lower(rest);
    for (int q = 0; q < kNumQualities; ++q) {
        if (suffix == detail::ascii_lower(detail::kQualitySuffix[q]))
            return Chord{root, static_cast<Quality>(q)};
    }
    return std::nullopt;
}

inline Chord parse_chord(std::string_view symbol) {
    if (auto c = try_parse_chord(symbol)) return *c;
    throw UnknownChordError(std::string(symbol));
}

inline ChordId parse_chord_id(std::string_view symbol) {
    return chord_id(parse_chord(symbol));
}

// d = 1 - c/(8-c) for c common notes; the only attainable values.
inline constexpr std::array<double, kNotesPerChord + 1> kJaccardByCommon{
    1.0, 6.0 / 7.0, 2.0 / 3.0, 2.0 / 5.0, 0.0,
};

constexpr double jaccard(NoteSet a, NoteSet b) {
    return kJaccardByCommon[std::popcount(
        static_cast<std::uint16_t>(a.mask() & b.mask()))];
}

constexpr double jaccard(Chord a, Chord b) {
    return jaccard(note_set(a), note_set(b));
}

// Precomputed 120x120 Jaccard distances, indexed by chord id.
class DistanceMatrix {
public:
    constexpr DistanceMatrix() : d_{} {
        for (int i = 0; i < kNumChords; ++i)
            for (int j = 0; j < kNumChords; ++j)
                d_[i][j] = jaccard(note_set(i), note_set(j));
    }

    constexpr double operator()(ChordId a, ChordId b) const {
        return d_[a][b];
    }

private:
    std::array<std::array<double, kNumChords>, kNumChords> d_;
};

constexpr DistanceMatrix build_distance_matrix() { return DistanceMatrix{}; }

// Built once, immutable, shared by every solver.
inline const DistanceMatrix& chord_distance() {
    static const DistanceMatrix matrix = build_distance_matrix();
    return matrix;
}

// A view over the fixed 120-chord alphabet: the id <-> chord bijection plus
// canonical spellings. Stateless; all data is compile-time.
struct ChordAlphabet {
    static constexpr int size() { return kNumChords; }
    static constexpr Chord at(ChordId id) { return chord_from_id(id); }
    static constexpr ChordId index_of(Chord c) { return chord_id(c); }
    static std::string name(ChordId id) { return format_chord(id); }
};

// FNV-1a over the canonical chord names in alphabet order; pins the model
// file contract to this exact ordering.
inline std::string alphabet_hash() {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto eat = [&h](std::string_view s) {
        for (char ch : s) {
            h ^= static_cast<unsigned char>(ch);
            h *= 0x100000001b3ULL;
        }
    };
    for (int id = 0; id < kNumChords; ++id) {
        eat(format_chord(id));
        eat("\n");
    }
    char buf[17];
    static constexpr char hex[] = "0123456789abcdef";
    for (int i = 0; i < 16; ++i)
        buf[i] = hex[(h >> (60 - 4 * i)) & 0xf];
    buf[16] = '\0';
    return std::string(buf);
}

} // namespace harmonagg
