#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sage/confidence.hpp"
#include "sage/cost.hpp"
#include "sage/model.hpp"
#include "sage/policy.hpp"
#include "sage/tree.hpp"
#include "sage/tree_builder.hpp"
#include "sage/verifier.hpp"

namespace sage {

enum class DecodeMode { vanilla_ar, sd_chain, sd_tree, sage };

inline const char* decode_mode_name(DecodeMode m) {
    switch (m) {
        case DecodeMode::vanilla_ar: return "vanilla_ar";
        case DecodeMode::sd_chain: return "sd_chain";
        case DecodeMode::sd_tree: return "sd_tree";
        case DecodeMode::sage: return "sage";
    }
    return "?";
}

inline DecodeMode decode_mode_from_name(const std::string& s) {
    if (s == "vanilla_ar") return DecodeMode::vanilla_ar;
    if (s == "sd_chain") return DecodeMode::sd_chain;
    if (s == "sd_tree") return DecodeMode::sd_tree;
    if (s == "sage") return DecodeMode::sage;
    throw ConfigError("unknown decode mode: " + s);
}

// How a round's drafting work is charged: one unit per tree node (the
// literal per-node reading) or one unit per drafted level (what a
// level-batched drafter would pay).
enum class DraftCostMode { per_node, per_level };

struct DecodeStepRecord {
    int step_index = 0;
    double alpha_used = 0.0;
    int depth_used = 0;
    int width_used = 0;
    int node_count = 0;
    int tau = 0;
    int committed_tokens = 0;
    int effective_d_max = 0;
    double draft_cost_units = 0.0;
    double target_cost_units = 0.0;
};

struct DecodeTrace {
    int schema = 1;
    std::string mode;
    std::uint64_t seed = 0;
    AdaptiveConfig config;
    std::vector<DecodeStepRecord> records;
    std::vector<TokenId> output;

    int tokens() const { return static_cast<int>(output.size()); }
    int rounds() const { return static_cast<int>(records.size()); }

    double total_draft_units() const {
        double s = 0.0;
        for (const auto& r : records) s += r.draft_cost_units;
        return s;
    }

    double total_target_units() const {
        double s = 0.0;
        for (const auto& r : records) s += r.target_cost_units;
        return s;
    }
};

struct EngineOptions {
    AdaptiveConfig adaptive;
    ThresholdMode threshold_mode = ThresholdMode::node;
    DraftCostMode draft_cost_mode = DraftCostMode::per_node;
    std::optional<TokenId> eos;
    TreeTemplate initial_template = default_initial_template();
    int chain_depth = 5;

    void validate() const {
        adaptive.validate();
        initial_template.validate();
        if (chain_depth < 1) {
            throw ConfigError("chain_depth must be >= 1");
        }
        if (initial_template.size() > adaptive.n_max) {
            throw ConfigError("initial tree template exceeds the node budget n_max");
        }
    }
};

namespace detail {

inline double draft_units_for(const DraftTree& tree, DraftCostMode mode) {
    if (mode == DraftCostMode::per_node) {
        return static_cast<double>(tree.size());
    }
    return static_cast<double>(tree.max_level());
}

// commit this round's tokens, honoring max_tokens and EOS; returns how many
// went out and whether decoding must stop
inline std::pair<int, bool> commit_tokens(const std::vector<TokenId>& round_tokens, Context& ctx,
                                          std::vector<TokenId>& output, int max_tokens,
                                          const std::optional<TokenId>& eos) {
    int committed = 0;
    bool stop = false;
    for (TokenId t : round_tokens) {
        if (static_cast<int>(output.size()) >= max_tokens) {
            stop = true;
            break;
        }
        ctx.push_token(t);
        output.push_back(t);
        ++committed;
        if (eos && t == *eos) {
            stop = true;
            break;
        }
    }
    if (static_cast<int>(output.size()) >= max_tokens) {
        stop = true;
    }
    return {committed, stop};
}

} // namespace detail

// target-only greedy rollout; the reference every decode mode must match
inline std::vector<TokenId> greedy_reference(const LanguageModel& target, const Context& prompt,
                                             int max_tokens, std::optional<TokenId> eos = std::nullopt) {
    if (max_tokens < 1) {
        throw ConfigError("max_tokens must be >= 1");
    }
    Context ctx = prompt;
    std::vector<TokenId> out;
    while (static_cast<int>(out.size()) < max_tokens) {
        TokenId t = argmax(target.forward(ctx));
        ctx.push_token(t);
        out.push_back(t);
        if (eos && t == *eos) {
            break;
        }
    }
    return out;
}

// The adaptive loop: draft a tree shaped by the previous round's confidence,
// verify against the target, commit the accepted prefix plus one bonus
// token, then re-estimate confidence at the new frontier and reshape. Round
// one uses the fixed seed template and alpha = 0.5.
inline DecodeTrace sage_decode(const LanguageModel& draft, const LanguageModel& target,
                               const Context& prompt, int max_tokens, const EngineOptions& opts) {
    if (max_tokens < 1) {
        throw ConfigError("max_tokens must be >= 1");
    }
    opts.validate();
    const AdaptiveConfig& cfg = opts.adaptive;

    DecodeTrace trace;
    trace.mode = decode_mode_name(DecodeMode::sage);
    trace.config = cfg;

    Context ctx = prompt;
    TauHistory history(cfg);
    double alpha = 0.5;
    bool first_round = true;
    int step = 0;

    while (static_cast<int>(trace.output.size()) < max_tokens) {
        int eff_d_max = history.effective_d_max();
        DraftTree tree(0);
        int depth_cmd = 0;
        int width_cmd = 0;
        if (first_round) {
            tree = fill_template(draft, ctx, opts.initial_template, eff_d_max);
            depth_cmd = tree.max_level();
            width_cmd = static_cast<int>(tree.root_children().size());
        } else {
            depth_cmd = depth_for(alpha, cfg, eff_d_max);
            width_cmd = width_for(alpha, cfg);
            tree = build_tree(draft, ctx, {depth_cmd, width_cmd}, cfg.n_max, opts.threshold_mode);
        }

        VerifyResult vr = verify(target, ctx, tree);
        history.observe(vr.tau);

        std::vector<TokenId> round_tokens = vr.accepted;
        round_tokens.push_back(vr.bonus);
        auto [committed, stop] = detail::commit_tokens(round_tokens, ctx, trace.output, max_tokens, opts.eos);

        DecodeStepRecord rec;
        rec.step_index = step++;
        rec.alpha_used = alpha;
        rec.depth_used = depth_cmd;
        rec.width_used = width_cmd;
        rec.node_count = tree.size();
        rec.tau = vr.tau;
        rec.committed_tokens = committed;
        rec.effective_d_max = eff_d_max;
        rec.draft_cost_units = detail::draft_units_for(tree, opts.draft_cost_mode);
        rec.target_cost_units = 1.0;
        trace.records.push_back(rec);

        if (stop) {
            break;
        }
        // confidence for the next round comes from the draft's distribution
        // at the deepest accepted position (the next tree's root); the bonus
        // token sits on top of the context right now, so step back one
        ctx.pop_token();
        ProbVector p_out = draft.forward(ctx);
        ctx.push_token(round_tokens[static_cast<std::size_t>(committed - 1)]);
        alpha = confidence_alpha(p_out, cfg.k);
        first_round = false;
    }
    return trace;
}

// Static baselines sharing the verifier (hence lossless): one-token target
// steps, a fixed greedy draft chain, or a fixed filled template.
inline DecodeTrace baseline_decode(DecodeMode mode, const LanguageModel& draft,
                                   const LanguageModel& target, const Context& prompt,
                                   int max_tokens, const EngineOptions& opts) {
    if (mode == DecodeMode::sage) {
        return sage_decode(draft, target, prompt, max_tokens, opts);
    }
    if (max_tokens < 1) {
        throw ConfigError("max_tokens must be >= 1");
    }
    opts.validate();

    DecodeTrace trace;
    trace.mode = decode_mode_name(mode);
    trace.config = opts.adaptive;

    Context ctx = prompt;
    int step = 0;
    while (static_cast<int>(trace.output.size()) < max_tokens) {
        DraftTree tree(0);
        if (mode == DecodeMode::sd_chain) {
            tree = DraftTree(opts.chain_depth);
            int parent = DraftTree::NO_PARENT;
            for (int l = 0; l < opts.chain_depth; ++l) {
                ProbVector dist = draft.forward(ctx);
                TokenId tok = argmax(dist);
                parent = tree.add_child(parent, tok, dist[static_cast<std::size_t>(tok)]);
                ctx.push_token(tok);
            }
            for (int l = 0; l < opts.chain_depth; ++l) {
                ctx.pop_token();
            }
        } else if (mode == DecodeMode::sd_tree) {
            tree = fill_template(draft, ctx, opts.initial_template);
        }

        VerifyResult vr = verify(target, ctx, tree);
        std::vector<TokenId> round_tokens = vr.accepted;
        round_tokens.push_back(vr.bonus);
        auto [committed, stop] = detail::commit_tokens(round_tokens, ctx, trace.output, max_tokens, opts.eos);

        DecodeStepRecord rec;
        rec.step_index = step++;
        rec.alpha_used = 0.0;
        rec.depth_used = tree.empty() ? 0 : tree.max_level();
        rec.width_used = static_cast<int>(tree.root_children().size());
        rec.node_count = tree.size();
        rec.tau = vr.tau;
        rec.committed_tokens = committed;
        rec.effective_d_max = opts.adaptive.d_max;
        rec.draft_cost_units = tree.empty() ? 0.0 : detail::draft_units_for(tree, opts.draft_cost_mode);
        rec.target_cost_units = 1.0;
        trace.records.push_back(rec);

        if (stop) {
            break;
        }
    }
    return trace;
}

} // namespace sage
