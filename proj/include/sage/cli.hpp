#pragma once

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sage/config.hpp"
#include "sage/engine.hpp"
#include "sage/metrics.hpp"
#include "sage/model_spec.hpp"
#include "sage/theory_report.hpp"

namespace sage {

// shorthand model descriptions for quick CLI runs, e.g.
//   coupled:eps=0.05,vocab=50
//   entropy:phi=0.8,sigma=0.15,targets=0.3;3.5,steps=300;300,pair_eps=0.1
//   ngram:corpus=data/corpus_small.txt,nd=1,nt=2
inline ModelSpec parse_model_shorthand(const std::string& text) {
    ModelSpec spec;
    std::string kind = text;
    std::string rest;
    std::size_t colon = text.find(':');
    if (colon != std::string::npos) {
        kind = text.substr(0, colon);
        rest = text.substr(colon + 1);
    }
    if (kind == "coupled" || kind == "coupled_pair") {
        spec.kind = "coupled_pair";
    } else if (kind == "entropy" || kind == "entropy_schedule") {
        spec.kind = "entropy_schedule";
    } else if (kind == "ngram" || kind == "ngram_corpus") {
        spec.kind = "ngram_corpus";
    } else {
        throw ConfigError("unknown model shorthand kind: " + kind);
    }

    auto parse_double = [](const std::string& key, const std::string& v) {
        try {
            std::size_t used = 0;
            double x = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (const std::exception&) {
            throw ConfigError("model shorthand: bad numeric value for " + key + ": " + v);
        }
    };
    auto parse_int = [&](const std::string& key, const std::string& v) {
        double x = parse_double(key, v);
        return static_cast<int>(x);
    };
    auto split_list = [](const std::string& v) {
        std::vector<std::string> parts;
        std::size_t start = 0;
        while (true) {
            std::size_t semi = v.find(';', start);
            parts.push_back(v.substr(start, semi == std::string::npos ? std::string::npos : semi - start));
            if (semi == std::string::npos) break;
            start = semi + 1;
        }
        return parts;
    };

    std::vector<double> targets;
    std::vector<int> steps;
    std::size_t pos = 0;
    while (pos < rest.size()) {
        std::size_t comma = rest.find(',', pos);
        std::string item = rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        pos = comma == std::string::npos ? rest.size() : comma + 1;
        if (item.empty()) continue;
        std::size_t eq = item.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("model shorthand: expected key=value, got '" + item + "'");
        }
        std::string key = item.substr(0, eq);
        std::string val = item.substr(eq + 1);
        if (key == "eps" || key == "epsilon") {
            spec.epsilon = parse_double(key, val);
        } else if (key == "pair_eps" || key == "pair_epsilon") {
            spec.pair_epsilon = parse_double(key, val);
        } else if (key == "vocab" || key == "vocab_size") {
            spec.vocab_size = parse_int(key, val);
        } else if (key == "seed") {
            spec.seed = static_cast<std::uint64_t>(std::stoull(val));
            spec.seed_set = true;
        } else if (key == "phi") {
            spec.phi = parse_double(key, val);
        } else if (key == "sigma") {
            spec.sigma = parse_double(key, val);
        } else if (key == "targets") {
            for (const auto& t : split_list(val)) targets.push_back(parse_double(key, t));
        } else if (key == "steps") {
            for (const auto& s : split_list(val)) steps.push_back(parse_int(key, s));
        } else if (key == "corpus") {
            spec.corpus_path = val;
        } else if (key == "vocab_table") {
            spec.vocab_table_path = val;
        } else if (key == "nd" || key == "n_draft") {
            spec.n_draft = parse_int(key, val);
        } else if (key == "nt" || key == "n_target") {
            spec.n_target = parse_int(key, val);
        } else {
            throw ConfigError("model shorthand: unknown key '" + key + "'");
        }
    }
    if (!targets.empty() || !steps.empty()) {
        if (targets.size() != steps.size()) {
            throw ConfigError("model shorthand: targets and steps lists must have equal length");
        }
        for (std::size_t i = 0; i < targets.size(); ++i) {
            spec.regimes.push_back({steps[i], targets[i]});
        }
    }
    spec.validate();
    return spec;
}

namespace detail {

inline std::uint64_t resolve_seed(bool flag_set, std::uint64_t flag_seed, const RunConfig& cfg) {
    if (flag_set) return flag_seed;
    if (cfg.seed_set) return cfg.seed;
    if (const char* env = std::getenv("SAGE_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw ConfigError("SAGE_SEED is not a valid integer: " + std::string(env));
        }
    }
    return 1;
}

inline std::uint64_t resolve_seed_simple(bool flag_set, std::uint64_t flag_seed) {
    RunConfig dummy;
    return resolve_seed(flag_set, flag_seed, dummy);
}

// entropy-scheduled models have a finite horizon; fail fast if the decode
// cannot fit instead of dying mid-run
inline void check_horizon(const RunConfig& cfg) {
    if (cfg.model.kind != "entropy_schedule") {
        return;
    }
    std::int64_t horizon = 0;
    if (cfg.model.regimes.empty()) {
        horizon = 4096;
    } else {
        for (const auto& r : cfg.model.regimes) horizon += r.steps;
    }
    std::int64_t depth_margin = std::max(cfg.adaptive.d_max, cfg.chain_depth) + 2;
    std::int64_t need = static_cast<std::int64_t>(cfg.prompt.size()) + cfg.max_tokens + depth_margin;
    if (horizon < need) {
        throw ConfigError("entropy schedule horizon " + std::to_string(horizon) +
                          " is too short for this run (needs >= " + std::to_string(need) +
                          "; extend regimes or lower max_tokens)");
    }
}

inline DecodeTrace run_one_mode(const std::string& mode, const ModelPair& models,
                                const RunConfig& cfg, std::uint64_t seed) {
    EngineOptions opts = cfg.engine_options();
    Context prompt(0, cfg.prompt);
    DecodeTrace trace;
    if (mode == "sage") {
        trace = sage_decode(*models.draft, *models.target, prompt, cfg.max_tokens, opts);
    } else {
        trace = baseline_decode(decode_mode_from_name(mode), *models.draft, *models.target, prompt,
                                cfg.max_tokens, opts);
    }
    trace.seed = seed;
    return trace;
}

struct SimulateResult {
    int exit_code = 0;
    std::vector<DecodeTrace> traces;
};

inline SimulateResult simulate_all_modes(const RunConfig& cfg, std::uint64_t seed, bool quiet) {
    check_horizon(cfg);
    ModelPair models = make_model_pair(cfg.model, seed);
    std::vector<std::string> modes;
    if (cfg.mode == "all") {
        modes = {"vanilla_ar", "sd_chain", "sd_tree", "sage"};
    } else {
        modes = {cfg.mode};
    }
    Context prompt(0, cfg.prompt);
    std::vector<TokenId> reference = greedy_reference(*models.target, prompt, cfg.max_tokens,
                                                      cfg.engine_options().eos);
    SimulateResult res;
    for (const auto& mode : modes) {
        DecodeTrace trace = run_one_mode(mode, models, cfg, seed);
        if (trace.output != reference) {
            std::fprintf(stderr,
                         "losslessness self-check FAILED for mode %s: output diverged from "
                         "target greedy (%zu vs %zu tokens)\n",
                         mode.c_str(), trace.output.size(), reference.size());
            res.exit_code = 3;
            return res;
        }
        if (!quiet) {
            Summary s = summarize(trace, cfg.cost);
            std::printf("%-10s tokens=%d rounds=%d mean_tau=%.4f speedup=%.4f\n", mode.c_str(),
                        s.tokens, s.rounds, s.mean_tau, s.modeled_speedup);
        }
        res.traces.push_back(std::move(trace));
    }
    return res;
}

inline void write_simulate_outputs(const SimulateResult& res, const RunConfig& cfg,
                                   const std::string& out_dir, const ModelPair& models) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::string summary = summary_csv_header();
    bool single = res.traces.size() == 1;
    for (const auto& trace : res.traces) {
        std::string stem = single ? "trace" : "trace_" + trace.mode;
        write_text_file(out_dir + "/" + stem + ".json", json_text(trace_to_json(trace)));
        write_text_file(out_dir + "/" + stem + ".csv", trace_rounds_csv(trace));
        summary += summary_csv_row(trace, summarize(trace, cfg.cost));
    }
    write_text_file(out_dir + "/summary.csv", summary);
    if (models.vocab) {
        write_text_file(out_dir + "/vocab.json", json_text(models.vocab->to_json()));
    }
}

} // namespace detail

// Programmatic entry point for the command-line harness; args exclude the
// program name. Exit codes: 0 success, 2 invalid configuration, 3
// losslessness self-check failure, 1 unexpected error.
inline int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"entropy-adaptive speculative decoding engine"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "run a decode and write trace + summary files");
    std::string sim_config, sim_mode, sim_model, sim_out = ".", sim_template;
    std::string sim_threshold, sim_cost_mode;
    std::uint64_t sim_seed = 0;
    int sim_max_tokens = -1, sim_chain_depth = -1, sim_eos = -1;
    std::vector<std::string> sim_sets;
    AdaptiveConfig flag_defaults;
    int f_d_min = -1, f_d_max = -1, f_w_min = -1, f_w_max = -1, f_k = -1, f_n_max = -1, f_window = -1;
    double f_lower = -1.0, f_upper = -1.0, f_c_d = -1.0, f_c_t = -1.0;
    sim->add_option("--config", sim_config, "JSON config file");
    sim->add_option("--mode", sim_mode, "vanilla_ar | sd_chain | sd_tree | sage | all");
    sim->add_option("--model", sim_model, "model shorthand, e.g. coupled:eps=0.05,vocab=50");
    sim->add_option("--seed", sim_seed, "run seed (overrides config and SAGE_SEED)");
    sim->add_option("--max-tokens", sim_max_tokens, "tokens to generate");
    sim->add_option("--out-dir", sim_out, "output directory");
    sim->add_option("--chain-depth", sim_chain_depth, "sd_chain draft length");
    sim->add_option("--template", sim_template, "tree template JSON for sd_tree / first round");
    sim->add_option("--threshold-mode", sim_threshold, "node | path");
    sim->add_option("--draft-cost-mode", sim_cost_mode, "per_node | per_level");
    sim->add_option("--eos", sim_eos, "EOS token id");
    sim->add_option("--set", sim_sets, "dotted config override, e.g. model.epsilon=0.1")->take_all();
    sim->add_option("--d-min", f_d_min, "minimum tree depth");
    sim->add_option("--d-max", f_d_max, "maximum tree depth");
    sim->add_option("--w-min", f_w_min, "minimum tree width");
    sim->add_option("--w-max", f_w_max, "maximum tree width");
    sim->add_option("--k", f_k, "top-k slice for confidence");
    sim->add_option("--n-max", f_n_max, "node budget per tree");
    sim->add_option("--window", f_window, "tau history window");
    sim->add_option("--lower-threshold", f_lower, "window mean below this shrinks depth cap");
    sim->add_option("--upper-threshold", f_upper, "window mean above this grows depth cap");
    sim->add_option("--c-d", f_c_d, "draft cost unit");
    sim->add_option("--c-t", f_c_t, "target cost unit");
    bool sim_quiet = false;
    sim->add_flag("--quiet", sim_quiet, "suppress per-mode progress lines");

    // theory
    auto* theory = app.add_subcommand("theory", "run the closed-form audit and write theory_report.json");
    std::string theory_out = ".";
    std::uint64_t theory_seed = 0;
    std::int64_t theory_trials = 1000000;
    theory->add_option("--out-dir", theory_out, "output directory");
    theory->add_option("--seed", theory_seed, "Monte-Carlo seed");
    theory->add_option("--trials", theory_trials, "Monte-Carlo trials per grid point");
    bool theory_quiet = false;
    theory->add_flag("--quiet", theory_quiet, "suppress verdict summary lines");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "run a config grid and write sweep.csv");
    std::string sweep_config, sweep_out = ".";
    std::uint64_t sweep_seed = 0;
    int sweep_jobs = 0;
    sweep->add_option("--config", sweep_config, "JSON file with {base: {...}, grid: {...}}")->required();
    sweep->add_option("--out-dir", sweep_out, "output directory");
    sweep->add_option("--seed", sweep_seed, "run seed (overrides config and SAGE_SEED)");
    sweep->add_option("--jobs", sweep_jobs, "worker threads (default: hardware, capped at grid size)");
    bool sweep_quiet = false;
    sweep->add_flag("--quiet", sweep_quiet, "suppress the completion line");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "autocorrelation of a trace's per-round entropy");
    std::string analyze_trace, analyze_out = ".";
    int analyze_max_lag = 20;
    analyze->add_option("--trace", analyze_trace, "trace.json produced by simulate")->required();
    analyze->add_option("--max-lag", analyze_max_lag, "largest lag to report");
    analyze->add_option("--out-dir", analyze_out, "output directory");
    bool analyze_quiet = false;
    analyze->add_flag("--quiet", analyze_quiet, "suppress the printed lag table");

    std::vector<const char*> argv;
    argv.push_back("sage");
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }

    try {
        try {
            app.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::CallForHelp& e) {
            return app.exit(e);
        } catch (const CLI::CallForAllHelp& e) {
            return app.exit(e);
        } catch (const CLI::ParseError& e) {
            app.exit(e);
            return 2;
        }

        if (sim->parsed()) {
            nlohmann::json cfg_json = nlohmann::json::object();
            if (!sim_config.empty()) {
                cfg_json = load_json_file(sim_config);
            }
            for (const auto& kv : sim_sets) {
                std::size_t eq = kv.find('=');
                if (eq == std::string::npos) {
                    throw ConfigError("--set expects path=value, got '" + kv + "'");
                }
                nlohmann::json value;
                try {
                    value = nlohmann::json::parse(kv.substr(eq + 1));
                } catch (const nlohmann::json::exception&) {
                    value = kv.substr(eq + 1);   // bare strings allowed
                }
                apply_json_override(cfg_json, kv.substr(0, eq), value);
            }
            RunConfig cfg = run_config_from_json(cfg_json);
            if (!sim_mode.empty()) cfg.mode = sim_mode;
            if (!sim_model.empty()) cfg.model = parse_model_shorthand(sim_model);
            if (sim_max_tokens >= 0) cfg.max_tokens = sim_max_tokens;
            if (sim_chain_depth >= 0) cfg.chain_depth = sim_chain_depth;
            if (!sim_template.empty()) cfg.template_path = sim_template;
            if (!sim_threshold.empty()) cfg.threshold_mode = sim_threshold;
            if (!sim_cost_mode.empty()) cfg.draft_cost_mode = sim_cost_mode;
            if (sim->count("--eos")) cfg.eos = sim_eos;
            if (f_d_min >= 0) cfg.adaptive.d_min = f_d_min;
            if (f_d_max >= 0) cfg.adaptive.d_max = f_d_max;
            if (f_w_min >= 0) cfg.adaptive.w_min = f_w_min;
            if (f_w_max >= 0) cfg.adaptive.w_max = f_w_max;
            if (f_k >= 0) cfg.adaptive.k = f_k;
            if (f_n_max >= 0) cfg.adaptive.n_max = f_n_max;
            if (f_window >= 0) cfg.adaptive.window = f_window;
            if (f_lower >= 0.0) cfg.adaptive.lower_threshold = f_lower;
            if (f_upper >= 0.0) cfg.adaptive.upper_threshold = f_upper;
            if (f_c_d >= 0.0) cfg.cost.c_d = f_c_d;
            if (f_c_t >= 0.0) cfg.cost.c_t = f_c_t;
            cfg.validate();
            std::uint64_t seed = detail::resolve_seed(sim->count("--seed") > 0, sim_seed, cfg);

            detail::SimulateResult res = detail::simulate_all_modes(cfg, seed, sim_quiet);
            if (res.exit_code != 0) {
                return res.exit_code;
            }
            ModelPair models = make_model_pair(cfg.model, seed);
            detail::write_simulate_outputs(res, cfg, sim_out, models);
            return 0;
        }

        if (theory->parsed()) {
            RunConfig dummy;
            std::uint64_t seed = detail::resolve_seed(theory->count("--seed") > 0, theory_seed, dummy);
            if (theory_trials < 1) {
                throw ConfigError("--trials must be >= 1");
            }
            nlohmann::json report = build_theory_report(theory_trials, seed);
            std::filesystem::create_directories(theory_out);
            write_text_file(theory_out + "/theory_report.json", json_text(report));
            if (!theory_quiet) {
                std::printf("acceptance_threshold(k=10, eps=0.05) = %.10f\n",
                            report["acceptance_threshold"]["reference_value"].get<double>());
                std::printf("expected tau verdict: %s\n",
                            report["expected_acceptance_length"]["verdict"].get<std::string>().c_str());
                std::printf("confidence bound verdict: %s\n",
                            report["confidence_probability_bound"]["verdict"].get<std::string>().c_str());
            }
            return 0;
        }

        if (sweep->parsed()) {
            nlohmann::json sweep_json = load_json_file(sweep_config);
            if (!sweep_json.is_object() || !sweep_json.contains("grid")) {
                throw ConfigError("sweep config needs {\"base\": {...}, \"grid\": {...}}");
            }
            nlohmann::json base = sweep_json.value("base", nlohmann::json::object());
            std::vector<SweepPoint> points = expand_sweep_grid(base, sweep_json.at("grid"));

            std::vector<std::string> param_cols;
            for (const auto& kv : points.front().params) {
                param_cols.push_back(kv.first);
            }

            struct Row {
                std::string text;
                int exit_code = 0;
                std::string error;
            };
            std::vector<Row> rows(points.size());
            std::atomic<std::size_t> next{0};
            unsigned hw = std::thread::hardware_concurrency();
            std::size_t n_jobs = sweep_jobs > 0 ? static_cast<std::size_t>(sweep_jobs)
                                                : std::max(1u, hw == 0 ? 1u : hw);
            n_jobs = std::min(n_jobs, points.size());
            bool flag_seed = sweep->count("--seed") > 0;

            auto worker = [&]() {
                while (true) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= points.size()) break;
                    Row& row = rows[i];
                    try {
                        RunConfig cfg = run_config_from_json(points[i].config_json);
                        std::uint64_t seed = detail::resolve_seed(flag_seed, sweep_seed, cfg);
                        detail::SimulateResult res = detail::simulate_all_modes(cfg, seed, true);
                        if (res.exit_code != 0) {
                            row.exit_code = res.exit_code;
                            row.error = "losslessness self-check failed";
                            continue;
                        }
                        for (const auto& trace : res.traces) {
                            Summary s = summarize(trace, cfg.cost);
                            std::string line;
                            for (const auto& col : param_cols) {
                                const nlohmann::json& v = points[i].params.at(col);
                                line += v.is_string() ? v.get<std::string>() : v.dump();
                                line += ',';
                            }
                            line += summary_csv_row(trace, s);
                            row.text += line;
                        }
                    } catch (const ConfigError& e) {
                        row.exit_code = 2;
                        row.error = e.what();
                    } catch (const std::exception& e) {
                        row.exit_code = 1;
                        row.error = e.what();
                    }
                }
            };
            std::vector<std::thread> threads;
            for (std::size_t t = 0; t < n_jobs; ++t) {
                threads.emplace_back(worker);
            }
            for (auto& t : threads) {
                t.join();
            }

            std::string csv;
            for (const auto& col : param_cols) {
                csv += col + ',';
            }
            csv += summary_csv_header();
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (rows[i].exit_code != 0) {
                    std::fprintf(stderr, "sweep point %zu failed: %s\n", i, rows[i].error.c_str());
                    return rows[i].exit_code;
                }
                csv += rows[i].text;
            }
            std::filesystem::create_directories(sweep_out);
            write_text_file(sweep_out + "/sweep.csv", csv);
            if (!sweep_quiet) {
                std::printf("sweep: %zu points -> %s/sweep.csv\n", points.size(), sweep_out.c_str());
            }
            return 0;
        }

        if (analyze->parsed()) {
            nlohmann::json j = load_json_file(analyze_trace);
            DecodeTrace trace = trace_from_json(j);
            if (analyze_max_lag < 1) {
                throw ConfigError("--max-lag must be >= 1");
            }
            if (trace.rounds() <= analyze_max_lag + 2) {
                throw ConfigError("trace has too few rounds (" + std::to_string(trace.rounds()) +
                                  ") for max lag " + std::to_string(analyze_max_lag));
            }
            std::vector<double> entropy;
            entropy.reserve(trace.records.size());
            for (const auto& r : trace.records) {
                entropy.push_back(record_entropy(r, trace.config.k));
            }
            AutocorrResult ac = lag_autocorrelation(entropy, analyze_max_lag);
            std::string csv = "lag,autocorrelation,degenerate\n";
            for (std::size_t lag = 0; lag < ac.r.size(); ++lag) {
                csv += std::to_string(lag) + ',' + format_double(ac.r[lag]) + ',' +
                       (ac.degenerate ? "1" : "0") + '\n';
            }
            std::filesystem::create_directories(analyze_out);
            write_text_file(analyze_out + "/autocorr.csv", csv);
            if (!analyze_quiet) {
                int show = std::min<int>(5, analyze_max_lag);
                for (int lag = 1; lag <= show; ++lag) {
                    std::printf("lag %d autocorrelation = %.6f\n", lag,
                                ac.r[static_cast<std::size_t>(lag)]);
                }
            }
            return 0;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

} // namespace sage
