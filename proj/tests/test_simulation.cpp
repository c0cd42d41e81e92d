#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "harmonagg/simulation.hpp"

using namespace harmonagg;

namespace {

// Chords whose note sets are unique in the alphabet (no dim7 / m6 / m7b5
// aliasing), so distance 0 pins the chord symbol itself.
std::vector<ChordId> safe_chords() {
    std::vector<ChordId> out;
    for (ChordId a = 0; a < kNumChords; ++a) {
        bool unique = true;
        for (ChordId b = 0; b < kNumChords; ++b)
            if (a != b && note_set(a) == note_set(b)) unique = false;
        if (unique) out.push_back(a);
    }
    return out;
}

std::vector<ChordId> synthetic_song(std::uint64_t seed) {
    static const std::vector<ChordId> safe = safe_chords();
    Rng rng(seed);
    std::vector<ChordId> loop(8);
    for (auto& c : loop) c = safe[bounded(rng, safe.size())];
    std::vector<ChordId> song;
    for (int rep = 0; rep < 8; ++rep)
        song.insert(song.end(), loop.begin(), loop.end());
    return song;
}

Corpus synthetic_corpus(std::uint64_t seed, int songs) {
    Corpus corpus;
    for (int s = 0; s < songs; ++s) {
        Song song;
        song.title = "synthetic_" + std::to_string(s);
        song.normalized = synthetic_song(derive_seed(seed, s));
        for (std::size_t j = 0; j < song.normalized.size(); j += 2)
            song.bars.push_back(
                {song.normalized[j], song.normalized[j + 1]});
        corpus.songs.push_back(std::move(song));
        ++corpus.stats.parsed;
        ++corpus.stats.normalized_64;
    }
    return corpus;
}

} // namespace

TEST_CASE("error ranges validate their bounds") {
    CHECK_NOTHROW(ErrorRange(0.0, 1.0));
    CHECK_NOTHROW(ErrorRange(3.0, 4.0));
    CHECK_THROWS_AS(ErrorRange(1.0, 1.0), Error);
    CHECK_THROWS_AS(ErrorRange(2.0, 1.0), Error);
    CHECK_THROWS_AS(ErrorRange(-0.5, 1.0), Error);
    CHECK_THROWS_AS(ErrorRange(3.0, 4.5), Error);
}

TEST_CASE("a vanishing error range leaves the song untouched") {
    const auto song = synthetic_song(1);
    Rng rng(2);
    const auto copy = perturb(song, ErrorRange(0.0, 1e-9), rng);
    CHECK(copy == song);
}

TEST_CASE("the per-position replacement rate matches (lo+hi)/8") {
    const auto song = synthetic_song(3);
    Rng rng(4);
    const ErrorRange range(1.0, 2.0);
    long replaced = 0, draws = 0;
    for (int agent = 0; agent < 500; ++agent) {
        const auto row = perturb(song, range, rng);
        for (std::size_t j = 0; j < song.size(); ++j) {
            replaced += row[j] != song[j];
            ++draws;
        }
    }
    const double rate = static_cast<double>(replaced) / draws;
    const double expected = (range.lo + range.hi) / 8.0;
    CHECK(rate == Catch::Approx(expected).margin(0.02 * expected));
}

TEST_CASE("replacements never reproduce the original chord") {
    const auto song = synthetic_song(5);
    Rng rng(6);
    // q is essentially 1, so every position should be replaced.
    const ErrorRange range(3.9999999, 4.0);
    for (int agent = 0; agent < 200; ++agent) {
        const auto row = perturb(song, range, rng);
        for (std::size_t j = 0; j < song.size(); ++j)
            REQUIRE(row[j] != song[j]);
    }
}

TEST_CASE("profiles have the requested shape and near-clean rows coincide") {
    const auto song = synthetic_song(7);
    Rng rng(8);
    const Profile profile = make_profile(song, 8, ErrorRange(0.0, 1e-9), rng);
    CHECK(profile.agents() == 8);
    CHECK(profile.length() == 64);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 64; ++j) REQUIRE(profile(i, j) == song[j]);
}

TEST_CASE("inter-row agreement approaches the analytic expectation") {
    const auto song = synthetic_song(9);
    const DistanceMatrix& d = chord_distance();
    const ErrorRange range(3.0, 4.0);
    const double mu = (range.lo + range.hi) / 8.0;

    // P(rows agree at j) = P(both kept) + P(both replaced by the same chord)
    // = (1-mu)^2 + mu^2 * sum_c w_c^2 with w the normalized replacement
    // weights at position j.
    double expected = 0.0;
    for (ChordId orig : song) {
        double total = 0.0, sq = 0.0;
        for (ChordId c = 0; c < kNumChords; ++c) {
            if (c == orig) continue;
            total += 1.0 - d(orig, c);
        }
        for (ChordId c = 0; c < kNumChords; ++c) {
            if (c == orig) continue;
            const double w = (1.0 - d(orig, c)) / total;
            sq += w * w;
        }
        expected += (1.0 - mu) * (1.0 - mu) + mu * mu * sq;
    }
    expected /= static_cast<double>(song.size());

    Rng rng(10);
    const int n = 64;
    const Profile profile = make_profile(song, n, range, rng);
    long agreements = 0, pairs = 0;
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            for (int j = 0; j < profile.length(); ++j) {
                agreements += profile(a, j) == profile(b, j);
                ++pairs;
            }
    const double observed = static_cast<double>(agreements) / pairs;
    CHECK(observed == Catch::Approx(expected).margin(0.02));
}

TEST_CASE("song similarity fixtures") {
    const auto song = synthetic_song(11);
    CHECK(song_similarity(song, song).sum == 0.0);

    const auto base = std::vector<ChordId>(64, parse_chord_id("CMaj7"));
    auto one_off = base;
    one_off[0] = parse_chord_id("FMaj7"); // distance 2/3 from CMaj7
    const auto score = song_similarity(one_off, base);
    CHECK(score.sum == Catch::Approx(2.0 / 3.0).margin(1e-12));
    CHECK(score.mean == Catch::Approx((2.0 / 3.0) / 64.0).margin(1e-12));

    CHECK_THROWS_AS(
        song_similarity(std::vector<ChordId>(3, 0), std::vector<ChordId>(4, 0)),
        LengthMismatchError);
}

TEST_CASE("song similarity equals an independent distance loop") {
    Rng rng(12);
    const auto original = synthetic_song(13);
    std::vector<ChordId> w(original.size());
    for (auto& c : w) c = static_cast<ChordId>(bounded(rng, kNumChords));

    double expected = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j)
        expected += jaccard(note_set(w[j]), note_set(original[j]));
    CHECK(song_similarity(w, original).sum ==
          Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("cluster coherence is zero when the aggregate equals every row") {
    const auto song = synthetic_song(14);
    Rng rng(15);
    const Profile profile = make_profile(song, 4, ErrorRange(0.0, 1e-9), rng);
    CHECK(cluster_coherence(profile, song) == 0.0);
}

TEST_CASE("cluster coherence under constant distances is 17c") {
    const int k = 40;
    Profile solo(1, k);
    for (int j = 0; j < k; ++j) solo(0, j) = parse_chord_id("Cmaj7");
    const std::vector<ChordId> w(k, parse_chord_id("Am7")); // d = 0.4

    // Oracle: direct triple summation.
    double expected = 0.0;
    for (int j = 0; j + 16 < k; ++j)
        for (int t = j; t <= j + 16; ++t)
            expected += 0.4;
    expected /= static_cast<double>(k - 16);

    CHECK(cluster_coherence(solo, w) == Catch::Approx(expected).margin(1e-12));
    CHECK(cluster_coherence(solo, w) ==
          Catch::Approx(17.0 * 0.4).margin(1e-9));
}

TEST_CASE("cluster coherence needs more than 16 positions") {
    Profile profile(1, 16);
    for (int j = 0; j < 16; ++j) profile(0, j) = 0;
    CHECK_THROWS_AS(cluster_coherence(profile, std::vector<ChordId>(16, 0)),
                    SequenceTooShortError);
    Profile longer(1, 17);
    for (int j = 0; j < 17; ++j) longer(0, j) = 0;
    CHECK_NOTHROW(cluster_coherence(longer, std::vector<ChordId>(17, 0)));
}

TEST_CASE("musical coherence fixtures") {
    const TransitionModel uniform = TransitionModel::uniform();
    Rng rng(16);
    std::vector<ChordId> w(10);
    for (auto& c : w) c = static_cast<ChordId>(bounded(rng, kNumChords));
    CHECK(musical_coherence(uniform, w) ==
          Catch::Approx(1.0 / 120.0).margin(1e-12));

    const TransitionModel certain = TransitionModel::with_entries({
        {parse_chord_id("CMaj7"), parse_chord_id("G7"), 1.0},
        {parse_chord_id("G7"), parse_chord_id("CMaj7"), 1.0},
    });
    const auto loop = std::vector<ChordId>{
        parse_chord_id("CMaj7"), parse_chord_id("G7"), parse_chord_id("CMaj7"),
        parse_chord_id("G7")};
    CHECK(musical_coherence(certain, loop) == 1.0);

    const TransitionModel toy = TransitionModel::with_entries({
        {parse_chord_id("CMaj7"), parse_chord_id("Dm7"), 0.0252903},
        {parse_chord_id("Dm7"), parse_chord_id("G7"), 0.199777},
        {parse_chord_id("G7"), parse_chord_id("Am7"), 0.0053198},
    });
    const auto toy_w = std::vector<ChordId>{
        parse_chord_id("Cmaj7"), parse_chord_id("Dm7"), parse_chord_id("G7"),
        parse_chord_id("Am7")};
    CHECK(musical_coherence(toy, toy_w) ==
          Catch::Approx(0.029963).margin(1e-5));
}

TEST_CASE("one song, rule, range and agent count make one cell") {
    ExperimentConfig config;
    config.songs = synthetic_corpus(17, 1);
    config.agent_counts = {8};
    config.error_ranges = {ErrorRange(0.0, 1.0)};
    config.rules = {Rule::plurality};
    config.seed = 18;
    const TransitionModel model = train(config.songs, 1e-6);
    const MetricsReport report = run_experiment(config, model);
    REQUIRE(report.cells.size() == 1);
    CHECK(report.failures.empty());
    CHECK(report.cells[0].song_id == "synthetic_0");
    CHECK(report.cells[0].n_agents == 8);
}

TEST_CASE("near-clean cells recover the original exactly") {
    ExperimentConfig config;
    config.songs = synthetic_corpus(19, 3);
    config.agent_counts = {8};
    config.error_ranges = {ErrorRange(0.0, 1e-9)};
    config.rules = {Rule::plurality, Rule::kemeny};
    config.seed = 20;
    const TransitionModel model = train(config.songs, 1e-6);
    const MetricsReport report = run_experiment(config, model);
    REQUIRE(report.cells.size() == 6);
    for (const auto& cell : report.cells)
        REQUIRE(cell.song_similarity_sum == 0.0);
}

TEST_CASE("rerunning an experiment reproduces the csv byte for byte") {
    ExperimentConfig config;
    config.songs = synthetic_corpus(21, 4);
    config.agent_counts = {4, 8};
    config.error_ranges = {ErrorRange(1.0, 2.0), ErrorRange(3.0, 4.0)};
    config.rules = {Rule::plurality, Rule::kemeny2};
    config.seed = 22;
    const TransitionModel model = train(config.songs, 1e-6);

    std::ostringstream first, second;
    write_metrics_csv(run_experiment(config, model), first);
    write_metrics_csv(run_experiment(config, model), second);
    CHECK(first.str() == second.str());
    CHECK(first.str().find("song_id,rule,error_lo,error_hi,n_agents,"
                           "song_similarity_sum,song_similarity_mean,"
                           "cluster_coherence,musical_coherence,wall_ms,"
                           "seed\n") == 0);
    // 4 songs x 2 ns x 2 ranges x 2 rules cells plus the header line
    const std::string text = first.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 33);
}

TEST_CASE("scheduling does not change experiment results") {
    ExperimentConfig config;
    config.songs = synthetic_corpus(23, 3);
    config.agent_counts = {4};
    config.error_ranges = {ErrorRange(1.0, 2.0)};
    config.rules = {Rule::plurality, Rule::kemeny, Rule::pav};
    config.seed = 24;
    const TransitionModel model = train(config.songs, 1e-6);

    config.threads = 1;
    std::ostringstream serial;
    write_metrics_csv(run_experiment(config, model), serial);
    config.threads = 3;
    std::ostringstream parallel;
    write_metrics_csv(run_experiment(config, model), parallel);
    CHECK(serial.str() == parallel.str());
}

TEST_CASE("a failing solver aborts its cell, not the run") {
    ExperimentConfig config;
    config.songs = synthetic_corpus(27, 2);
    config.agent_counts = {8};
    config.rules = {Rule::plurality, Rule::kemeny2};
    config.seed = 28;
    // Unsmoothed model: the kemeny2 DP needs every transition probability
    // positive and must fail; plurality solves and its near-original output
    // stays on in-corpus transitions, so its metrics still evaluate.
    config.error_ranges = {ErrorRange(0.0, 1e-9)};
    const TransitionModel model = train(config.songs, 0.0, true);
    const MetricsReport report = run_experiment(config, model);
    CHECK(report.cells.size() == 2);
    CHECK(report.failures.size() == 2);
    for (const auto& cell : report.cells)
        CHECK(cell.rule == Rule::plurality);
    for (const auto& failure : report.failures)
        CHECK(failure.find("kemeny2") != std::string::npos);
}

TEST_CASE("HARMONAGG_THREADS caps the worker pool") {
    setenv("HARMONAGG_THREADS", "2", 1);
    CHECK(resolve_thread_count(0) <= 2);
    CHECK(resolve_thread_count(16) == 2);
    CHECK(resolve_thread_count(1) == 1);
    unsetenv("HARMONAGG_THREADS");
    CHECK(resolve_thread_count(16) == 16);
}

TEST_CASE("per-cell averages aggregate over songs") {
    ExperimentConfig config;
    config.songs = synthetic_corpus(25, 5);
    config.agent_counts = {4};
    config.error_ranges = {ErrorRange(2.0, 3.0)};
    config.rules = {Rule::plurality};
    config.seed = 26;
    const TransitionModel model = train(config.songs, 1e-6);
    const MetricsReport report = run_experiment(config, model);
    const auto averages = report.averages();
    REQUIRE(averages.size() == 1);
    CHECK(averages[0].songs == 5);
    double mean = 0.0;
    for (const auto& cell : report.cells) mean += cell.song_similarity_sum;
    mean /= 5.0;
    CHECK(averages[0].song_similarity_sum == Catch::Approx(mean).margin(1e-12));
    // sum and mean stay consistent per cell
    for (const auto& cell : report.cells)
        REQUIRE(cell.song_similarity_sum ==
                Catch::Approx(cell.song_similarity_mean * 64.0).margin(1e-9));
}
