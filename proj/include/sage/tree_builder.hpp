#pragma once

#include <algorithm>

#include "sage/model.hpp"
#include "sage/policy.hpp"
#include "sage/prob.hpp"
#include "sage/tree.hpp"

namespace sage {

// Whether the inclusion threshold tests a candidate's own probability or its
// cumulative path probability.
enum class ThresholdMode { node, path };

struct TreeShape {
    int depth;
    int width;
};

namespace detail {

// Candidate at (level, rank) enters the tree iff rank < level width AND
// (prob > threshold OR rank == 0). The rank-0 exemption keeps one greedy
// chain alive even when every candidate is below threshold, so the tree is
// never empty. Included nodes expand depth-first, children in descending
// probability, until the depth or node budget stops them; the budget
// therefore keeps the highest-probability prefixes.
inline void expand_level(const LanguageModel& draft, Context& ctx, DraftTree& tree,
                         const TreeShape& shape, ThresholdMode mode,
                         int parent_idx, int level, double parent_prob, double parent_path,
                         const ProbVector& dist) {
    if (level > shape.depth || tree.full()) {
        return;
    }
    int w = level_width(shape.width, level, parent_prob);
    if (w > static_cast<int>(dist.size())) {
        w = static_cast<int>(dist.size());
    }
    double theta = level_threshold(level, shape.depth);
    auto ranked = top_ranked(dist, static_cast<std::size_t>(w));
    for (int r = 0; r < w; ++r) {
        double q = ranked[static_cast<std::size_t>(r)].prob;
        double metric = mode == ThresholdMode::node ? q : parent_path * q;
        if (r > 0 && !(metric > theta)) {
            break;                      // ranks are descending; later ones fail too
        }
        if (tree.full()) {
            return;
        }
        TokenId tok = ranked[static_cast<std::size_t>(r)].id;
        int idx = tree.add_child(parent_idx, tok, q);
        if (level < shape.depth && !tree.full()) {
            ctx.push_token(tok);
            ProbVector child_dist = draft.forward(ctx);
            expand_level(draft, ctx, tree, shape, mode, idx, level + 1, q, parent_path * q, child_dist);
            ctx.pop_token();
        }
    }
}

} // namespace detail

// Grow an adaptive draft tree below ctx. The context is borrowed mutably for
// the walk and restored before returning.
inline DraftTree build_tree(const LanguageModel& draft, Context& ctx, const TreeShape& shape,
                            int n_max, ThresholdMode mode = ThresholdMode::node) {
    if (shape.depth < 1 || shape.width < 1) {
        throw ConfigError("build_tree: shape must have depth >= 1 and width >= 1");
    }
    DraftTree tree(n_max);
    if (n_max == 0) {
        return tree;
    }
    ProbVector root_dist = draft.forward(ctx);
    detail::expand_level(draft, ctx, tree, shape, mode, DraftTree::NO_PARENT, 1, 1.0, 1.0, root_dist);
    return tree;
}

// Fill a fixed (parent, rank) template with the draft's ranked candidates.
// Slots whose rank has no distinct token in this vocabulary are skipped with
// their subtrees; max_depth (if given) prunes slots below that level.
inline DraftTree fill_template(const LanguageModel& draft, Context& ctx, const TreeTemplate& tmpl,
                               int max_depth = INT32_MAX) {
    tmpl.validate();
    DraftTree tree(tmpl.size());
    if (tmpl.size() == 0) {
        return tree;
    }
    int v = draft.vocab_size();
    std::vector<std::vector<int>> kids(tmpl.slots.size());
    std::vector<int> roots;
    for (std::size_t i = 0; i < tmpl.slots.size(); ++i) {
        int p = tmpl.slots[i].parent;
        if (p == -1) {
            roots.push_back(static_cast<int>(i));
        } else {
            kids[static_cast<std::size_t>(p)].push_back(static_cast<int>(i));
        }
    }
    auto fill = [&](auto&& self, const std::vector<int>& slot_ids, int parent_idx, int level,
                    const ProbVector& dist) -> void {
        if (level > max_depth) {
            return;
        }
        int max_rank = -1;
        for (int si : slot_ids) {
            max_rank = std::max(max_rank, tmpl.slots[static_cast<std::size_t>(si)].rank);
        }
        if (max_rank < 0) {
            return;
        }
        auto ranked = top_ranked(dist, static_cast<std::size_t>(std::min(max_rank + 1, v)));
        for (int si : slot_ids) {
            int rank = tmpl.slots[static_cast<std::size_t>(si)].rank;
            if (rank >= v) {
                continue;               // no distinct token at this rank
            }
            TokenId tok = ranked[static_cast<std::size_t>(rank)].id;
            double q = ranked[static_cast<std::size_t>(rank)].prob;
            int idx = tree.add_child(parent_idx, tok, q);
            if (!kids[static_cast<std::size_t>(si)].empty() && level < max_depth) {
                ctx.push_token(tok);
                ProbVector child_dist = draft.forward(ctx);
                self(self, kids[static_cast<std::size_t>(si)], idx, level + 1, child_dist);
                ctx.pop_token();
            }
        }
    };
    ProbVector root_dist = draft.forward(ctx);
    fill(fill, roots, DraftTree::NO_PARENT, 1, root_dist);
    return tree;
}

struct ValidationResult {
    bool ok;
    bool truncated;   // the rule alone would have added nodes past the budget
};

// Independent membership check: re-derives the expected node sequence from
// the inclusion rule in the builder's deterministic order and compares it
// against the tree, so manual insertions, omissions, and reordered nodes all
// fail. A tree cut short by the node budget validates with truncated = true.
inline ValidationResult validate_tree_against_rule(const DraftTree& tree, const LanguageModel& draft,
                                                   Context& ctx, const TreeShape& shape, int n_max,
                                                   ThresholdMode mode = ThresholdMode::node) {
    if (shape.depth < 1 || shape.width < 1) {
        throw ConfigError("validate_tree_against_rule: bad shape");
    }
    int next = 0;
    int used = 0;
    bool truncated = false;
    int v = draft.vocab_size();

    // returns false to abort (mismatch or budget reached)
    auto walk = [&](auto&& self, int parent_idx, int level, double parent_prob, double parent_path,
                    const ProbVector& dist) -> bool {
        if (level > shape.depth) {
            return true;
        }
        int w = level_width(shape.width, level, parent_prob);
        if (w > static_cast<int>(dist.size())) {
            w = static_cast<int>(dist.size());
        }
        double theta = level_threshold(level, shape.depth);
        auto ranked = top_ranked(dist, static_cast<std::size_t>(w));
        for (int r = 0; r < w; ++r) {
            double q = ranked[static_cast<std::size_t>(r)].prob;
            double metric = mode == ThresholdMode::node ? q : parent_path * q;
            if (r > 0 && !(metric > theta)) {
                break;
            }
            if (used == n_max) {
                truncated = true;
                return false;
            }
            if (next >= tree.size()) {
                return false;           // rule expects a node the tree lacks
            }
            const DraftTree::Node& n = tree.node(next);
            TokenId tok = ranked[static_cast<std::size_t>(r)].id;
            if (n.parent != parent_idx || n.token != tok || n.node_prob != q || n.level != level) {
                return false;
            }
            ++next;
            ++used;
            if (level < shape.depth && used < n_max) {
                ctx.push_token(tok);
                ProbVector child_dist = draft.forward(ctx);
                bool cont = self(self, next - 1, level + 1, q, parent_path * q, child_dist);
                ctx.pop_token();
                if (!cont) {
                    return false;
                }
            } else if (level < shape.depth && used == n_max) {
                truncated = true;       // a forced rank-0 child was due here
                return false;
            }
        }
        return true;
    };

    bool complete = true;
    if (n_max > 0 && tree.size() <= n_max) {
        ProbVector root_dist = draft.forward(ctx);
        complete = walk(walk, DraftTree::NO_PARENT, 1, 1.0, 1.0, root_dist);
    } else if (tree.size() > n_max) {
        return {false, false};
    }
    bool ok = (next == tree.size()) && (complete || truncated);
    return {ok, truncated};
}

} // namespace sage
