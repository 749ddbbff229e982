#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sage/cost.hpp"
#include "sage/engine.hpp"
#include "sage/errors.hpp"

namespace sage {

struct Summary {
    double mean_tau = 0.0;
    int rounds = 0;
    int tokens = 0;
    double modeled_speedup = 0.0;
};

// Cost-model speedup: tokens produced per unit of charged work, normalized
// so a vanilla trace (zero draft units, one target unit per token) scores
// exactly 1. Scale-invariant in (c_d, c_t).
inline Summary summarize(const DecodeTrace& trace, const CostModel& cost) {
    cost.validate();
    if (trace.records.empty()) {
        throw std::invalid_argument("summarize: empty trace");
    }
    Summary s;
    s.rounds = trace.rounds();
    s.tokens = trace.tokens();
    double tau_sum = 0.0;
    double work = 0.0;
    for (const auto& r : trace.records) {
        tau_sum += r.tau;
        work += cost.c_d * r.draft_cost_units + cost.c_t * r.target_cost_units;
    }
    s.mean_tau = tau_sum / s.rounds;
    s.modeled_speedup = (s.tokens * cost.c_t) / work;
    return s;
}

struct AutocorrResult {
    std::vector<double> r;   // index = lag, r[0] == 1
    bool degenerate = false; // some leg had zero variance; those lags are 0
};

// Pearson correlation of (x_t, x_{t+k}) for k = 0..max_lag, each leg with
// its own mean and variance. long double accumulation keeps the value
// stable under series reversal.
inline AutocorrResult lag_autocorrelation(const std::vector<double>& series, int max_lag) {
    if (max_lag < 0) {
        throw std::invalid_argument("lag_autocorrelation: negative max_lag");
    }
    if (static_cast<int>(series.size()) <= max_lag + 2) {
        throw std::invalid_argument("lag_autocorrelation: series too short for requested lag");
    }
    AutocorrResult out;
    out.r.resize(static_cast<std::size_t>(max_lag) + 1, 0.0);
    out.r[0] = 1.0;
    std::size_t n = series.size();

    // lag 0 still gets the degenerate check
    {
        long double mean = 0.0L;
        for (double x : series) mean += x;
        mean /= n;
        long double var = 0.0L;
        for (double x : series) var += (x - mean) * (x - mean);
        if (var <= 0.0L) {
            out.degenerate = true;
            out.r[0] = 0.0;
        }
    }

    for (int k = 1; k <= max_lag; ++k) {
        std::size_t m = n - static_cast<std::size_t>(k);
        long double mean_a = 0.0L, mean_b = 0.0L;
        for (std::size_t t = 0; t < m; ++t) {
            mean_a += series[t];
            mean_b += series[t + static_cast<std::size_t>(k)];
        }
        mean_a /= m;
        mean_b /= m;
        long double cov = 0.0L, var_a = 0.0L, var_b = 0.0L;
        for (std::size_t t = 0; t < m; ++t) {
            long double da = series[t] - mean_a;
            long double db = series[t + static_cast<std::size_t>(k)] - mean_b;
            cov += da * db;
            var_a += da * da;
            var_b += db * db;
        }
        if (var_a <= 0.0L || var_b <= 0.0L) {
            out.degenerate = true;
            out.r[static_cast<std::size_t>(k)] = 0.0;
        } else {
            out.r[static_cast<std::size_t>(k)] =
                static_cast<double>(cov / std::sqrt(var_a * var_b));
        }
    }
    return out;
}

inline std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline nlohmann::json adaptive_to_json(const AdaptiveConfig& c) {
    return nlohmann::json{
        {"d_min", c.d_min},   {"d_max", c.d_max},
        {"w_min", c.w_min},   {"w_max", c.w_max},
        {"k", c.k},           {"n_max", c.n_max},
        {"window", c.window},
        {"lower_threshold", c.lower_threshold},
        {"upper_threshold", c.upper_threshold},
    };
}

inline AdaptiveConfig adaptive_from_json(const nlohmann::json& j) {
    AdaptiveConfig c;
    try {
        c.d_min = j.value("d_min", c.d_min);
        c.d_max = j.value("d_max", c.d_max);
        c.w_min = j.value("w_min", c.w_min);
        c.w_max = j.value("w_max", c.w_max);
        c.k = j.value("k", c.k);
        c.n_max = j.value("n_max", c.n_max);
        c.window = j.value("window", c.window);
        c.lower_threshold = j.value("lower_threshold", c.lower_threshold);
        c.upper_threshold = j.value("upper_threshold", c.upper_threshold);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("adaptive config: ") + e.what());
    }
    c.validate();
    return c;
}

// per-round entropy implied by the recorded confidence; analysis reads this
// column back out of trace files
inline double record_entropy(const DecodeStepRecord& r, int k) {
    return (1.0 - r.alpha_used) * std::log(static_cast<double>(k));
}

inline nlohmann::json trace_to_json(const DecodeTrace& trace) {
    nlohmann::json j;
    j["schema"] = trace.schema;
    j["mode"] = trace.mode;
    j["seed"] = trace.seed;
    j["adaptive"] = adaptive_to_json(trace.config);
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : trace.records) {
        recs.push_back({
            {"step_index", r.step_index},
            {"alpha_used", r.alpha_used},
            {"entropy", record_entropy(r, trace.config.k)},
            {"depth_used", r.depth_used},
            {"width_used", r.width_used},
            {"node_count", r.node_count},
            {"tau", r.tau},
            {"committed_tokens", r.committed_tokens},
            {"effective_d_max", r.effective_d_max},
            {"draft_cost_units", r.draft_cost_units},
            {"target_cost_units", r.target_cost_units},
        });
    }
    j["records"] = recs;
    j["output"] = trace.output;
    j["totals"] = {
        {"tokens", trace.tokens()},
        {"rounds", trace.rounds()},
        {"draft_cost_units", trace.total_draft_units()},
        {"target_cost_units", trace.total_target_units()},
    };
    return j;
}

inline DecodeTrace trace_from_json(const nlohmann::json& j) {
    DecodeTrace t;
    try {
        t.schema = j.at("schema").get<int>();
        if (t.schema != 1) {
            throw ConfigError("trace: unsupported schema version");
        }
        t.mode = j.at("mode").get<std::string>();
        t.seed = j.at("seed").get<std::uint64_t>();
        t.config = adaptive_from_json(j.at("adaptive"));
        for (const auto& e : j.at("records")) {
            DecodeStepRecord r;
            r.step_index = e.at("step_index").get<int>();
            r.alpha_used = e.at("alpha_used").get<double>();
            r.depth_used = e.at("depth_used").get<int>();
            r.width_used = e.at("width_used").get<int>();
            r.node_count = e.at("node_count").get<int>();
            r.tau = e.at("tau").get<int>();
            r.committed_tokens = e.at("committed_tokens").get<int>();
            r.effective_d_max = e.at("effective_d_max").get<int>();
            r.draft_cost_units = e.at("draft_cost_units").get<double>();
            r.target_cost_units = e.at("target_cost_units").get<double>();
            t.records.push_back(r);
        }
        t.output = j.at("output").get<std::vector<TokenId>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("trace: ") + e.what());
    }
    return t;
}

// per-round CSV rows; column list documented in the README
inline std::string trace_rounds_csv(const DecodeTrace& trace) {
    std::string out = "step_index,alpha_used,entropy,depth_used,width_used,node_count,tau,"
                      "committed_tokens,effective_d_max,draft_cost_units,target_cost_units\n";
    for (const auto& r : trace.records) {
        out += std::to_string(r.step_index) + ',';
        out += format_double(r.alpha_used) + ',';
        out += format_double(record_entropy(r, trace.config.k)) + ',';
        out += std::to_string(r.depth_used) + ',';
        out += std::to_string(r.width_used) + ',';
        out += std::to_string(r.node_count) + ',';
        out += std::to_string(r.tau) + ',';
        out += std::to_string(r.committed_tokens) + ',';
        out += std::to_string(r.effective_d_max) + ',';
        out += format_double(r.draft_cost_units) + ',';
        out += format_double(r.target_cost_units) + '\n';
    }
    return out;
}

inline std::string summary_csv_header() {
    return "mode,seed,tokens,rounds,mean_tau,modeled_speedup\n";
}

inline std::string summary_csv_row(const DecodeTrace& trace, const Summary& s) {
    return trace.mode + ',' + std::to_string(trace.seed) + ',' + std::to_string(s.tokens) + ',' +
           std::to_string(s.rounds) + ',' + format_double(s.mean_tau) + ',' +
           format_double(s.modeled_speedup) + '\n';
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out << content;
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

inline std::string json_text(const nlohmann::json& j) {
    return j.dump(2) + "\n";
}

} // namespace sage
