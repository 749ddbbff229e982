#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sage/cost.hpp"
#include "sage/engine.hpp"
#include "sage/errors.hpp"
#include "sage/metrics.hpp"
#include "sage/model_spec.hpp"
#include "sage/tree.hpp"

namespace sage {

// One simulate run, fully described. The JSON form of this is the config
// file; CLI flags override individual fields after loading.
struct RunConfig {
    std::string mode = "sage";            // vanilla_ar | sd_chain | sd_tree | sage | all
    std::uint64_t seed = 1;
    bool seed_set = false;
    int max_tokens = 256;
    ModelSpec model;
    AdaptiveConfig adaptive;
    CostModel cost;
    std::string threshold_mode = "node";  // node | path
    std::string draft_cost_mode = "per_node";
    std::optional<TokenId> eos;
    std::vector<TokenId> prompt;
    std::string template_path;            // empty -> built-in seed template
    int chain_depth = 5;

    void validate() const {
        if (mode != "vanilla_ar" && mode != "sd_chain" && mode != "sd_tree" && mode != "sage" &&
            mode != "all") {
            throw ConfigError("mode must be one of vanilla_ar, sd_chain, sd_tree, sage, all");
        }
        if (max_tokens < 1) {
            throw ConfigError("max_tokens must be >= 1");
        }
        if (threshold_mode != "node" && threshold_mode != "path") {
            throw ConfigError("threshold_mode must be node or path");
        }
        if (draft_cost_mode != "per_node" && draft_cost_mode != "per_level") {
            throw ConfigError("draft_cost_mode must be per_node or per_level");
        }
        if (chain_depth < 1) {
            throw ConfigError("chain_depth must be >= 1");
        }
        model.validate();
        adaptive.validate();
        cost.validate();
    }

    EngineOptions engine_options() const {
        EngineOptions opts;
        opts.adaptive = adaptive;
        opts.threshold_mode = threshold_mode == "path" ? ThresholdMode::path : ThresholdMode::node;
        opts.draft_cost_mode =
            draft_cost_mode == "per_level" ? DraftCostMode::per_level : DraftCostMode::per_node;
        opts.eos = eos;
        opts.chain_depth = chain_depth;
        if (!template_path.empty()) {
            opts.initial_template = load_template_file(template_path);
        }
        return opts;
    }
};

inline RunConfig run_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    static const char* known_keys[] = {"mode",          "seed",           "max_tokens",
                                       "model",         "adaptive",       "cost",
                                       "threshold_mode", "draft_cost_mode", "eos",
                                       "prompt",        "template_path",  "chain_depth"};
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : known_keys) {
            if (item.key() == k) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw ConfigError("config: unknown key '" + item.key() + "'");
        }
    }
    RunConfig c;
    try {
        c.mode = j.value("mode", c.mode);
        if (j.contains("seed")) {
            c.seed = j.at("seed").get<std::uint64_t>();
            c.seed_set = true;
        }
        c.max_tokens = j.value("max_tokens", c.max_tokens);
        if (j.contains("model")) {
            c.model = model_spec_from_json(j.at("model"));
        }
        if (j.contains("adaptive")) {
            c.adaptive = adaptive_from_json(j.at("adaptive"));
        }
        if (j.contains("cost")) {
            c.cost.c_d = j.at("cost").value("c_d", c.cost.c_d);
            c.cost.c_t = j.at("cost").value("c_t", c.cost.c_t);
        }
        c.threshold_mode = j.value("threshold_mode", c.threshold_mode);
        c.draft_cost_mode = j.value("draft_cost_mode", c.draft_cost_mode);
        if (j.contains("eos") && !j.at("eos").is_null()) {
            c.eos = j.at("eos").get<TokenId>();
        }
        if (j.contains("prompt")) {
            c.prompt = j.at("prompt").get<std::vector<TokenId>>();
        }
        c.template_path = j.value("template_path", c.template_path);
        c.chain_depth = j.value("chain_depth", c.chain_depth);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return j;
}

// set a dotted path like "model.epsilon" inside a JSON object, creating
// intermediate objects as needed
inline void apply_json_override(nlohmann::json& root, const std::string& dotted,
                                const nlohmann::json& value) {
    if (dotted.empty()) {
        throw ConfigError("override: empty parameter path");
    }
    nlohmann::json* cur = &root;
    std::size_t start = 0;
    while (true) {
        std::size_t dot = dotted.find('.', start);
        std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) {
            throw ConfigError("override: malformed parameter path '" + dotted + "'");
        }
        if (dot == std::string::npos) {
            (*cur)[key] = value;
            return;
        }
        cur = &(*cur)[key];
        start = dot + 1;
    }
}

struct SweepPoint {
    std::map<std::string, nlohmann::json> params;   // dotted path -> value
    nlohmann::json config_json;                     // base with overrides applied
};

// Expand {"path": [values...]} into the full cross product. Axes iterate in
// sorted key order with the last axis fastest, so row order is reproducible.
inline std::vector<SweepPoint> expand_sweep_grid(const nlohmann::json& base,
                                                 const nlohmann::json& grid) {
    if (!grid.is_object() || grid.empty()) {
        throw ConfigError("sweep: grid must be a non-empty object of {parameter: [values...]}");
    }
    std::vector<std::string> keys;
    std::vector<std::vector<nlohmann::json>> values;
    for (auto it = grid.begin(); it != grid.end(); ++it) {   // nlohmann objects iterate sorted
        if (!it.value().is_array() || it.value().empty()) {
            throw ConfigError("sweep: grid entry '" + it.key() + "' must be a non-empty array");
        }
        keys.push_back(it.key());
        values.push_back(std::vector<nlohmann::json>(it.value().begin(), it.value().end()));
    }
    std::vector<SweepPoint> points;
    std::vector<std::size_t> idx(keys.size(), 0);
    while (true) {
        SweepPoint pt;
        pt.config_json = base;
        for (std::size_t i = 0; i < keys.size(); ++i) {
            pt.params[keys[i]] = values[i][idx[i]];
            apply_json_override(pt.config_json, keys[i], values[i][idx[i]]);
        }
        points.push_back(std::move(pt));
        std::size_t axis = keys.size();
        while (axis > 0) {
            --axis;
            if (++idx[axis] < values[axis].size()) {
                break;
            }
            idx[axis] = 0;
            if (axis == 0) {
                return points;
            }
        }
    }
}

} // namespace sage
