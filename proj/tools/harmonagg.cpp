// Command-line front end: corpus ingestion and 2-gram training, single
// instance aggregation under eight rules, batch simulation experiments, and
// small inspection helpers.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "harmonagg/harmonagg.hpp"

namespace {

using namespace harmonagg;

// JSON config files mirroring the flag tree: top-level keys are global
// options, one nested object per subcommand. Unknown keys are rejected.
class ConfigJson : public CLI::Config {
public:
    std::string to_config(const CLI::App* app, bool default_also, bool,
                          std::string) const override {
        return dump(app, default_also).dump(2);
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(input);
        } catch (const nlohmann::json::exception& e) {
            throw CLI::FileError(std::string("config is not valid JSON: ") +
                                 e.what());
        }
        std::vector<CLI::ConfigItem> items;
        collect(j, {}, items);
        return items;
    }

private:
    static nlohmann::json dump(const CLI::App* app, bool default_also) {
        nlohmann::json j = nlohmann::json::object();
        for (const CLI::Option* opt : app->get_options()) {
            if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
            const std::string name = opt->get_lnames()[0];
            if (!opt->results().empty()) {
                if (opt->results().size() == 1)
                    j[name] = opt->results()[0];
                else
                    j[name] = opt->results();
            } else if (default_also && !opt->get_default_str().empty())
                j[name] = opt->get_default_str();
        }
        for (const CLI::App* sub : app->get_subcommands({}))
            if (sub->parsed()) j[sub->get_name()] = dump(sub, default_also);
        return j;
    }

    static void collect(const nlohmann::json& j,
                        const std::vector<std::string>& parents,
                        std::vector<CLI::ConfigItem>& items) {
        for (const auto& [key, value] : j.items()) {
            if (value.is_object()) {
                auto nested = parents;
                nested.push_back(key);
                collect(value, nested, items);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array()) {
                for (const auto& element : value)
                    item.inputs.push_back(element.is_string()
                                              ? element.get<std::string>()
                                              : element.dump());
            } else if (value.is_string()) {
                item.inputs.push_back(value.get<std::string>());
            } else {
                item.inputs.push_back(value.dump());
            }
            items.push_back(std::move(item));
        }
    }
};

std::string fmt6(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", value);
    return buf;
}

struct AnnealFlags {
    int iterations = 1000;
    double t_initial = 1.0;
    double cooling = 0.995;
};

void add_anneal_flags(CLI::App* cmd, AnnealFlags& flags) {
    cmd->add_option("--iterations", flags.iterations,
                    "annealing iterations per search")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--t0", flags.t_initial, "initial annealing temperature")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--cooling", flags.cooling,
                    "geometric cooling factor in (0,1)")
        ->check(CLI::Range(1e-9, 1.0 - 1e-9))
        ->capture_default_str();
}

void add_weight_flags(CLI::App* cmd, ObjectiveWeights& weights) {
    cmd->add_option("--x-m", weights.x_m, "plurality2 mixing weight")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cmd->add_option("--x-k", weights.x_k, "kemeny2 mixing weight")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cmd->add_option("--x-p", weights.x_p, "pav2 mixing weight")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cmd->add_option("--x-kc", weights.x_kc, "clustered2 mixing weight")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
}

ErrorRange parse_range(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos)
        throw Error("range must be 'lo,hi', got '" + text + "'");
    return ErrorRange(std::stod(text.substr(0, comma)),
                      std::stod(text.substr(comma + 1)));
}

void log_resolved_config(const CLI::App& app) {
    std::cerr << "resolved config: "
              << app.get_config_formatter()->to_config(&app, false, false, "")
              << '\n';
}

int run_train(const std::string& corpus_path, double alpha,
              const std::string& out_path, const std::string& policy,
              bool filter_32) {
    const auto policy_value = policy == "strict" ? UnknownChordPolicy::strict
                                                 : UnknownChordPolicy::skip;
    Corpus corpus = [&] {
        try {
            return load_corpus(corpus_path, policy_value);
        } catch (const CorpusFormatError& e) {
            // surfaced as a usage-level failure, with the line number
            throw Error(std::string("corpus: ") + e.what());
        }
    }();
    std::cout << "parsed " << corpus.stats.parsed << " songs, skipped "
              << corpus.stats.skipped << " (32-bar simulation-ready: "
              << corpus.stats.normalized_64 << ")\n";
    if (filter_32) corpus = filter_simulation_set(corpus);

    const TransitionModel model =
        train(corpus, alpha, /*allow_zero_rows=*/alpha == 0.0);
    if (alpha == 0.0) {
        int zero_rows = 0;
        for (int u = 0; u < kNumChords; ++u) {
            double sum = 0.0;
            for (double p : model.row(u)) sum += p;
            zero_rows += sum == 0.0;
        }
        if (zero_rows > 0)
            std::cerr << "warning: " << zero_rows
                      << " transition rows have no counts (alpha = 0); the "
                         "model supports counting but not likelihoods\n";
    }
    save_model(model, out_path);
    std::cout << "trained on " << corpus.songs.size()
              << " songs, wrote model to " << out_path << '\n';
    return 0;
}

void print_agent_block(const Profile& profile, const std::vector<ChordId>& w) {
    for (int i = 0; i < profile.agents(); ++i) {
        const double sat = satisfaction(profile, i, w);
        std::cout << "satisfaction agent " << (i + 1) << " = " << fmt6(sat)
                  << " (similarity " << fmt6(profile.length() - sat) << ")\n";
    }
}

int run_aggregate(const std::string& profile_path, const std::string& rule_name_,
                  const std::string& model_path, std::uint64_t seed,
                  const ObjectiveWeights& weights, const AnnealFlags& anneal,
                  int x_max, double off_section_weight,
                  const std::string& mode, const std::string& trace_path) {
    const auto rule = rule_from_name(rule_name_);
    if (!rule) {
        std::cerr << "error: unknown rule '" << rule_name_ << "'\n";
        return 1;
    }
    if (uses_2gram(*rule) && model_path.empty()) {
        std::cerr << "error: rule '" << rule_name_ << "' needs --model\n";
        return 1;
    }

    Profile profile = [&] {
        try {
            return load_profile(profile_path);
        } catch (const FormatError&) {
            throw;
        } catch (const Error& e) {
            throw CLI::FileError(e.what()); // missing file: usage-level
        }
    }();

    TransitionModel model;
    const bool has_model = !model_path.empty();
    if (has_model) model = load_model(model_path);

    AnnealingConfig anneal_config;
    anneal_config.iterations = anneal.iterations;
    anneal_config.t_initial = anneal.t_initial;
    anneal_config.cooling = anneal.cooling;
    anneal_config.seed = seed;
    const int effective_x_max =
        x_max > 0 ? std::min(x_max, profile.agents())
                  : std::min(8, profile.agents());

    Solution solution;
    const ClusteredSolveResult* clustered = nullptr;
    ClusteredSolveResult clustered_result;
    SearchTrace trace;
    bool have_trace = false;
    switch (*rule) {
        case Rule::plurality:
            solution = solve_plurality(profile);
            break;
        case Rule::kemeny:
            solution = solve_kemeny(profile);
            break;
        case Rule::pav:
            solution = solve_pav(profile, weights, nullptr, anneal_config, {},
                                 &trace);
            have_trace = true;
            break;
        case Rule::pav2:
            solution = solve_pav(profile, weights, &model, anneal_config, {},
                                 &trace);
            have_trace = true;
            break;
        case Rule::kemeny2:
            solution = solve_kemeny_2gram_dp(profile, weights, model);
            break;
        case Rule::plurality2:
            solution = solve_plurality_2gram_dp(profile, weights, model);
            break;
        case Rule::clustered:
        case Rule::clustered2: {
            ClusteredSolveConfig config;
            config.anneal = anneal_config;
            config.weights = weights;
            config.trace_out = &trace;
            if (*rule == Rule::clustered2) config.model = &model;
            const bool force_anneal = mode == "anneal";
            const bool force_exact = mode == "exact";
            config.mode = (*rule == Rule::clustered2 || force_anneal)
                              ? ClusteredMode::anneal
                              : ClusteredMode::exact;
            if (config.mode == ClusteredMode::exact && !force_exact) {
                try {
                    clustered_result = solve_clustered_kemeny(
                        profile, effective_x_max, off_section_weight, config);
                } catch (const BudgetExceededError&) {
                    std::cerr << "note: instance too large for exact "
                                 "clustered solving, annealing instead\n";
                    config.mode = ClusteredMode::anneal;
                }
            }
            if (config.mode == ClusteredMode::anneal) {
                clustered_result = solve_clustered_kemeny(
                    profile, effective_x_max, off_section_weight, config);
                have_trace = true;
            }
            solution = clustered_result.solution;
            clustered = &clustered_result;
            break;
        }
    }

    if (!trace_path.empty()) {
        if (have_trace) {
            std::ofstream trace_file(trace_path);
            if (!trace_file)
                throw Error("cannot write trace file: " + trace_path);
            write_trace_csv(trace, trace_file);
        } else {
            std::cerr << "note: rule '" << rule_name_
                      << "' solves exactly; no annealing trace written\n";
        }
    }

    std::cout << format_sequence(solution.w) << '\n';
    std::cout << "plurality = " << score_plurality(profile, solution.w) << '\n';
    std::cout << "kemeny = " << fmt6(score_kemeny(profile, solution.w)) << '\n';
    std::cout << "pav = " << fmt6(score_pav(profile, solution.w)) << '\n';
    if (clustered) {
        std::cout << "clustered = " << fmt6(clustered->score) << '\n';
        std::cout << "sections:";
        const auto& starts = clustered->partition.starts;
        for (std::size_t s = 0; s < starts.size(); ++s) {
            const int end = s + 1 < starts.size()
                                ? clustered->partition.starts[s + 1]
                                : profile.length();
            std::cout << " [" << (starts[s] + 1) << "," << end << "]";
        }
        std::cout << '\n' << "agent_sections:";
        for (int section : clustered->assignment.section_of)
            std::cout << ' ' << (section + 1);
        std::cout << '\n';
    }
    if (has_model) {
        std::cout << "G = " << fmt6(neg_log_likelihood(model, solution.w))
                  << '\n';
        if (*rule == Rule::clustered2 && clustered) {
            std::cout << "clustered2 = "
                      << fmt6(combined_clustered2(
                             profile, solution.w, clustered->partition,
                             clustered->assignment, weights, model))
                      << '\n';
        } else if (uses_2gram(*rule)) {
            std::cout << rule_name_ << " = "
                      << fmt6(combined_objective(*rule, profile, solution.w,
                                                 weights, model))
                      << '\n';
        }
    }
    print_agent_block(profile, solution.w);
    return 0;
}

int run_simulate(const std::string& corpus_path, const std::string& model_path,
                 const std::vector<int>& agents,
                 const std::vector<std::string>& ranges,
                 const std::vector<std::string>& rules,
                 const std::string& out_path, std::uint64_t seed, int songs,
                 const ObjectiveWeights& weights, const AnnealFlags& anneal,
                 int x_max, double off_section_weight, int threads,
                 bool timing) {
    const Corpus full = load_corpus(corpus_path);
    Corpus sim = filter_simulation_set(full);
    if (sim.songs.empty()) {
        std::cerr << "error: no 32-bar songs in the corpus (parsed "
                  << full.stats.parsed << ", skipped " << full.stats.skipped
                  << ", simulation-ready " << full.stats.normalized_64
                  << ")\n";
        return 1;
    }
    if (songs > 0 && static_cast<int>(sim.songs.size()) > songs)
        sim.songs.resize(songs);

    ExperimentConfig config;
    config.songs = std::move(sim);
    config.agent_counts = agents;
    for (const auto& text : ranges)
        config.error_ranges.push_back(parse_range(text));
    for (const auto& name : rules) {
        const auto rule = rule_from_name(name);
        if (!rule) {
            std::cerr << "error: unknown rule '" << name << "'\n";
            return 1;
        }
        config.rules.push_back(*rule);
    }
    config.weights = weights;
    config.anneal.iterations = anneal.iterations;
    config.anneal.t_initial = anneal.t_initial;
    config.anneal.cooling = anneal.cooling;
    config.seed = seed;
    config.x_max = x_max > 0 ? x_max : 8;
    config.off_section_weight = off_section_weight;
    config.threads = threads;
    config.record_timing = timing;

    const std::size_t total = config.songs.songs.size() *
                              config.agent_counts.size() *
                              config.error_ranges.size() *
                              config.rules.size();
    std::size_t done = 0;
    config.on_cell = [&](const CellMetrics& cell) {
        ++done;
        std::cerr << "[" << done << "/" << total << "] " << cell.song_id
                  << " n=" << cell.n_agents << " range=(" << cell.range.lo
                  << "," << cell.range.hi << ") " << rule_name(cell.rule)
                  << " similarity=" << fmt6(cell.song_similarity_sum) << '\n';
    };

    const TransitionModel model = load_model(model_path);
    const MetricsReport report = run_experiment(config, model);
    for (const auto& failure : report.failures)
        std::cerr << "cell failed: " << failure << '\n';

    std::ofstream out(out_path);
    if (!out) throw Error("cannot write results file: " + out_path);
    write_metrics_csv(report, out);

    std::cout << "wrote " << report.cells.size() << " rows to " << out_path
              << '\n';
    std::cout << "averages (rule, range, n): similarity_sum cluster musical\n";
    for (const auto& avg : report.averages())
        std::cout << "  " << rule_name(avg.rule) << " (" << avg.range.lo << ","
                  << avg.range.hi << ") n=" << avg.n_agents << ": "
                  << fmt6(avg.song_similarity_sum) << ' '
                  << fmt6(avg.cluster_coherence) << ' '
                  << fmt6(avg.musical_coherence) << '\n';
    return 0;
}

int run_distance(const std::string& a, const std::string& b) {
    const Chord chord_a = parse_chord(a);
    const Chord chord_b = parse_chord(b);
    std::cout << fmt6(jaccard(chord_a, chord_b)) << '\n';
    return 0;
}

int run_inspect(const std::string& model_path, int top,
                const std::string& chord_symbol) {
    const TransitionModel model = load_model(model_path);
    auto print_top = [&](ChordId from) {
        std::vector<ChordId> order(kNumChords);
        for (int v = 0; v < kNumChords; ++v) order[v] = v;
        std::stable_sort(order.begin(), order.end(), [&](ChordId x, ChordId y) {
            return model(from, x) > model(from, y);
        });
        for (int r = 0; r < top && r < kNumChords; ++r)
            std::cout << format_chord(from) << " -> "
                      << format_chord(order[r]) << " p="
                      << fmt6(model(from, order[r])) << '\n';
    };
    if (!chord_symbol.empty()) {
        print_top(parse_chord_id(chord_symbol));
        return 0;
    }
    // No chord given: the globally most probable transitions.
    std::vector<std::pair<ChordId, ChordId>> arcs;
    arcs.reserve(kNumChords * kNumChords);
    for (ChordId u = 0; u < kNumChords; ++u)
        for (ChordId v = 0; v < kNumChords; ++v) arcs.emplace_back(u, v);
    std::stable_sort(arcs.begin(), arcs.end(),
                     [&](const auto& x, const auto& y) {
                         return model(x.first, x.second) >
                                model(y.first, y.second);
                     });
    for (int r = 0; r < top && r < static_cast<int>(arcs.size()); ++r)
        std::cout << format_chord(arcs[r].first) << " -> "
                  << format_chord(arcs[r].second) << " p="
                  << fmt6(model(arcs[r].first, arcs[r].second)) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"chord-sequence aggregation: train 2-gram models, aggregate "
                 "agent profiles under eight rules, run batch simulations"};
    app.require_subcommand(1);
    app.set_config("--config", "", "JSON config file mirroring the flags");
    app.config_formatter(std::make_shared<ConfigJson>());
    app.allow_config_extras(CLI::config_extras_mode::error);

    // train
    auto* train_cmd =
        app.add_subcommand("train", "train a transition model from a corpus");
    std::string corpus_path, out_path = "model.json", policy = "skip";
    double alpha = 1e-6;
    bool filter_32 = false;
    train_cmd->add_option("corpus", corpus_path, "corpus text file")
        ->required();
    train_cmd->add_option("--alpha", alpha, "additive smoothing")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    train_cmd->add_option("--out,-o", out_path, "model output path")
        ->capture_default_str();
    train_cmd->add_option("--policy", policy, "unknown-chord policy")
        ->check(CLI::IsMember({"skip", "strict"}))
        ->capture_default_str();
    train_cmd->add_flag("--filter-32bars", filter_32,
                        "train only on the 32-bar simulation set");

    // aggregate
    auto* agg_cmd = app.add_subcommand(
        "aggregate", "aggregate an agent profile into one sequence");
    std::string profile_path, agg_rule, agg_model, agg_mode = "auto";
    std::uint64_t agg_seed = 0;
    ObjectiveWeights agg_weights;
    AnnealFlags agg_anneal;
    int agg_x_max = 0;
    double agg_off_weight = 0.0;
    agg_cmd->add_option("--profile", profile_path, "profile file")->required();
    agg_cmd->add_option("--rule", agg_rule,
                        "plurality|kemeny|pav|clustered|plurality2|kemeny2|"
                        "pav2|clustered2")
        ->required();
    agg_cmd->add_option("--model", agg_model,
                        "transition model (required for 2-gram rules)");
    agg_cmd->add_option("--seed", agg_seed, "annealing seed")
        ->capture_default_str();
    add_weight_flags(agg_cmd, agg_weights);
    add_anneal_flags(agg_cmd, agg_anneal);
    agg_cmd->add_option("--x-max", agg_x_max,
                        "max sections for clustered rules (0 = min(8, n))")
        ->capture_default_str();
    agg_cmd
        ->add_option("--off-section-weight", agg_off_weight,
                     "weight of chords outside an agent's home section")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    agg_cmd->add_option("--mode", agg_mode, "clustered solving mode")
        ->check(CLI::IsMember({"auto", "exact", "anneal"}))
        ->capture_default_str();
    std::string agg_trace;
    agg_cmd->add_option("--trace", agg_trace,
                        "write the annealing trace CSV here");

    // simulate
    auto* sim_cmd = app.add_subcommand(
        "simulate", "run perturbation experiments over a corpus");
    std::string sim_corpus, sim_model, sim_out;
    std::vector<int> sim_agents{8, 16, 32};
    std::vector<std::string> sim_ranges{"0,1", "1,2", "2,3", "3,4"};
    std::vector<std::string> sim_rules(kRuleNames.begin(), kRuleNames.end());
    std::uint64_t sim_seed = 0;
    int sim_songs = 0, sim_threads = 0, sim_x_max = 0;
    double sim_off_weight = 0.0;
    bool sim_timing = false;
    ObjectiveWeights sim_weights;
    AnnealFlags sim_anneal;
    sim_cmd->add_option("--corpus", sim_corpus, "corpus text file")->required();
    sim_cmd->add_option("--model", sim_model, "transition model")->required();
    sim_cmd->add_option("--out", sim_out, "results CSV path")->required();
    sim_cmd->add_option("--agents", sim_agents, "agent counts")
        ->capture_default_str();
    sim_cmd->add_option("--ranges", sim_ranges, "error ranges as lo,hi")
        ->capture_default_str();
    sim_cmd->add_option("--rules", sim_rules, "rules to evaluate")
        ->capture_default_str();
    sim_cmd->add_option("--seed", sim_seed, "master seed")
        ->capture_default_str();
    sim_cmd->add_option("--songs", sim_songs, "limit on simulation songs (0 = all)")
        ->capture_default_str();
    add_weight_flags(sim_cmd, sim_weights);
    add_anneal_flags(sim_cmd, sim_anneal);
    sim_cmd->add_option("--x-max", sim_x_max,
                        "max sections for clustered rules (0 = 8)")
        ->capture_default_str();
    sim_cmd
        ->add_option("--off-section-weight", sim_off_weight,
                     "weight of chords outside an agent's home section")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    sim_cmd->add_option("--threads", sim_threads,
                        "worker threads (0 = hardware, HARMONAGG_THREADS caps)")
        ->capture_default_str();
    sim_cmd->add_flag("--timing", sim_timing,
                      "record wall-clock times in the CSV (breaks rerun "
                      "byte-identity)");

    // distance
    auto* dist_cmd =
        app.add_subcommand("distance", "Jaccard distance of two chords");
    std::string chord_a, chord_b;
    dist_cmd->add_option("chordA", chord_a, "first chord")->required();
    dist_cmd->add_option("chordB", chord_b, "second chord")->required();

    // inspect-model
    auto* inspect_cmd = app.add_subcommand(
        "inspect-model", "show the most probable transitions");
    std::string inspect_model, inspect_chord;
    int inspect_top = 5;
    inspect_cmd->add_option("--model", inspect_model, "transition model")
        ->required();
    inspect_cmd->add_option("--top", inspect_top, "transitions to list")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    inspect_cmd->add_option("chord", inspect_chord,
                            "restrict to transitions out of this chord");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        log_resolved_config(app);
        if (train_cmd->parsed())
            return run_train(corpus_path, alpha, out_path, policy, filter_32);
        if (agg_cmd->parsed())
            return run_aggregate(profile_path, agg_rule, agg_model, agg_seed,
                                 agg_weights, agg_anneal, agg_x_max,
                                 agg_off_weight, agg_mode, agg_trace);
        if (sim_cmd->parsed())
            return run_simulate(sim_corpus, sim_model, sim_agents, sim_ranges,
                                sim_rules, sim_out, sim_seed, sim_songs,
                                sim_weights, sim_anneal, sim_x_max,
                                sim_off_weight, sim_threads, sim_timing);
        if (dist_cmd->parsed()) return run_distance(chord_a, chord_b);
        if (inspect_cmd->parsed())
            return run_inspect(inspect_model, inspect_top, inspect_chord);
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const CLI::FileError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
