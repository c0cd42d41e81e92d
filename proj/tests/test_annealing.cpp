#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "harmonagg/annealing.hpp"
#include "harmonagg/objectives.hpp"
#include "harmonagg/rng.hpp"
#include "harmonagg/solvers.hpp"

using namespace harmonagg;

namespace {

std::vector<ChordId> seq(const std::vector<std::string>& symbols) {
    std::vector<ChordId> out;
    for (const auto& s : symbols) out.push_back(parse_chord_id(s));
    return out;
}

} // namespace

TEST_CASE("a constant objective keeps the initial state as best") {
    const std::vector<ChordId> initial = seq({"Cmaj7", "G7"});
    const auto alphabet = full_alphabet();
    AnnealingConfig config;
    config.seed = 1;
    const auto result = anneal(
        [](const std::vector<ChordId>&) { return 42.0; }, Direction::minimize,
        initial, [&](const std::vector<ChordId>& w,
                     Rng& rng) { return sequence_neighbor(w, rng, alphabet); },
        config);
    CHECK(result.best == initial);
    CHECK(result.best_score == 42.0);
    CHECK(result.trace.rows.size() == 1000);
}

TEST_CASE("identical seeds give identical traces") {
    const Profile profile(
        std::vector<std::vector<ChordId>>{seq({"Cmaj7", "Dm7", "G7", "Am7"})});
    const auto alphabet = full_alphabet();
    auto objective = [&](const std::vector<ChordId>& w) {
        return score_kemeny(profile, w);
    };
    auto neighbor = [&](const std::vector<ChordId>& w, Rng& rng) {
        return sequence_neighbor(w, rng, alphabet);
    };
    AnnealingConfig config;
    config.seed = 20240131;
    const std::vector<ChordId> start(4, parse_chord_id("B7"));
    const auto a = anneal(objective, Direction::minimize, start, neighbor,
                          config);
    const auto b = anneal(objective, Direction::minimize, start, neighbor,
                          config);
    CHECK(a.best == b.best);
    CHECK(a.trace.accepted == b.trace.accepted);
    REQUIRE(a.trace.rows.size() == b.trace.rows.size());
    for (std::size_t i = 0; i < a.trace.rows.size(); ++i) {
        REQUIRE(a.trace.rows[i].current_score == b.trace.rows[i].current_score);
        REQUIRE(a.trace.rows[i].best_score == b.trace.rows[i].best_score);
    }
}

TEST_CASE("best-so-far never worsens, in either direction") {
    const Profile profile(
        std::vector<std::vector<ChordId>>{seq({"Cmaj7", "Dm7", "G7", "Am7"})});
    const auto alphabet = full_alphabet();
    auto neighbor = [&](const std::vector<ChordId>& w, Rng& rng) {
        return sequence_neighbor(w, rng, alphabet);
    };
    AnnealingConfig config;
    config.seed = 5;
    const std::vector<ChordId> start(4, 0);

    const auto down = anneal(
        [&](const std::vector<ChordId>& w) { return score_kemeny(profile, w); },
        Direction::minimize, start, neighbor, config);
    for (std::size_t i = 1; i < down.trace.rows.size(); ++i)
        REQUIRE(down.trace.rows[i].best_score <=
                down.trace.rows[i - 1].best_score);

    const auto up = anneal(
        [&](const std::vector<ChordId>& w) { return score_pav(profile, w); },
        Direction::maximize, start, neighbor, config);
    for (std::size_t i = 1; i < up.trace.rows.size(); ++i)
        REQUIRE(up.trace.rows[i].best_score >=
                up.trace.rows[i - 1].best_score);
}

TEST_CASE("single-agent kemeny annealing reaches the optimum") {
    // 10-chord sub-alphabet, k = 8; the agent's own row is the unique
    // distance-0 optimum within the sub-alphabet.
    const auto alphabet = seq({"Cmaj7", "Dm7", "Em7", "Fmaj7", "G7", "Am7",
                               "Bm7b5", "C7", "D7", "E7"});
    std::vector<ChordId> row;
    for (int j = 0; j < 8; ++j) row.push_back(alphabet[j % 5]);
    const Profile profile(std::vector<std::vector<ChordId>>{row});
    auto objective = [&](const std::vector<ChordId>& w) {
        return score_kemeny(profile, w);
    };
    auto neighbor = [&](const std::vector<ChordId>& w, Rng& rng) {
        return sequence_neighbor(w, rng, alphabet);
    };

    int hits = 0;
    for (int s = 0; s < 100; ++s) {
        AnnealingConfig config;
        config.seed = derive_seed(1234, s);
        const std::vector<ChordId> start(8, alphabet[9]);
        const auto result =
            anneal(objective, Direction::minimize, start, neighbor, config);
        if (result.best_score == 0.0) ++hits;
    }
    CHECK(hits >= 95);
}

TEST_CASE("sequence neighbor changes exactly one position") {
    const auto alphabet = full_alphabet();
    Rng rng(99);
    std::vector<ChordId> state = seq({"Cmaj7", "Dm7", "G7", "Am7"});
    for (int trial = 0; trial < 10000; ++trial) {
        const auto next = sequence_neighbor(state, rng, alphabet);
        int changed = 0;
        for (std::size_t j = 0; j < state.size(); ++j)
            changed += next[j] != state[j];
        REQUIRE(changed == 1);
    }
}

TEST_CASE("sequence neighbor mutates positions uniformly") {
    const auto alphabet = full_alphabet();
    Rng rng(7);
    const int k = 4, samples = 10000;
    std::vector<ChordId> state = seq({"Cmaj7", "Dm7", "G7", "Am7"});
    std::vector<int> counts(k, 0);
    for (int trial = 0; trial < samples; ++trial) {
        const auto next = sequence_neighbor(state, rng, alphabet);
        for (int j = 0; j < k; ++j)
            if (next[j] != state[j]) ++counts[j];
    }
    for (int j = 0; j < k; ++j) {
        const double freq = static_cast<double>(counts[j]) / samples;
        REQUIRE(freq == Catch::Approx(1.0 / k).margin(0.05 / k));
    }
}

TEST_CASE("a two-chord alphabet always flips to the other chord") {
    const std::vector<ChordId> alphabet = seq({"Cmaj7", "G7"});
    Rng rng(3);
    std::vector<ChordId> state(3, alphabet[0]);
    for (int trial = 0; trial < 100; ++trial) {
        const auto next = sequence_neighbor(state, rng, alphabet);
        int changed = 0;
        for (std::size_t j = 0; j < state.size(); ++j)
            if (next[j] != state[j]) {
                REQUIRE(next[j] == alphabet[1]);
                ++changed;
            }
        REQUIRE(changed == 1);
    }
}

TEST_CASE("clustered neighbor always yields valid states") {
    const auto alphabet = full_alphabet();
    Rng rng(11);
    ClusteredState state;
    state.w = seq({"Cmaj7", "Dm7", "G7", "Am7", "B7", "E7"});
    state.partition = SectionPartition{{0, 2, 4}, 3};
    state.assignment.section_of = {0, 1, 2};
    state.assignment.off_section_weight = 0.0;

    for (int trial = 0; trial < 10000; ++trial) {
        state = clustered_neighbor(state, rng, alphabet);
        REQUIRE(state.partition.sections() == 3);
        REQUIRE_NOTHROW(state.partition.validate(6, 3));
        for (int section : state.assignment.section_of) {
            REQUIRE(section >= 0);
            REQUIRE(section < 3);
        }
        REQUIRE(state.w.size() == 6);
    }
}

TEST_CASE("with one section only chord moves apply") {
    const auto alphabet = full_alphabet();
    Rng rng(13);
    ClusteredState state;
    state.w = seq({"Cmaj7", "Dm7", "G7"});
    state.partition = SectionPartition{{0}, 1};
    state.assignment.section_of = {0, 0};
    state.assignment.off_section_weight = 0.0;

    for (int trial = 0; trial < 3000; ++trial) {
        const auto next = clustered_neighbor(state, rng, alphabet);
        REQUIRE(next.partition.starts == state.partition.starts);
        REQUIRE(next.assignment.section_of == state.assignment.section_of);
        int changed = 0;
        for (std::size_t j = 0; j < state.w.size(); ++j)
            changed += next.w[j] != state.w[j];
        REQUIRE(changed <= 1);
    }
}

TEST_CASE("clustered annealing reaches the toy optimum often enough") {
    const Profile profile(std::vector<std::vector<ChordId>>{
        seq({"Cmaj7", "Dm7", "G7", "Cmaj7"}),
        seq({"Am7", "Dm7", "E7", "Am7"}),
        seq({"Cmaj7", "Fmaj7", "G7", "Am7"}),
    });
    int hits = 0;
    for (int s = 0; s < 100; ++s) {
        ClusteredSolveConfig config;
        config.mode = ClusteredMode::anneal;
        config.anneal.seed = derive_seed(777, s);
        const auto result = solve_clustered_kemeny(profile, 3, 0.0, config);
        if (result.score == 0.0) ++hits;
    }
    CHECK(hits >= 80);
}

TEST_CASE("traces export as csv") {
    SearchTrace trace;
    trace.rows = {{3.0, 3.0, 1.0}, {2.0, 2.0, 0.995}};
    std::ostringstream out;
    write_trace_csv(trace, out);
    CHECK(out.str() ==
          "iteration,current_score,best_score,temperature\n"
          "0,3,3,1\n"
          "1,2,2,0.995\n");
}
