#pragma once

#include <vector>

#include "sage/model.hpp"
#include "sage/prob.hpp"
#include "sage/tree.hpp"

namespace sage {

// Outcome of one verification pass: the deepest drafted prefix that matches
// target greedy, plus the bonus token the target produces after it. tau = 0
// with an empty best_path degenerates to a plain autoregressive step.
struct VerifyResult {
    int tau = 0;
    std::vector<int> best_path;        // node indices, root child first
    std::vector<TokenId> accepted;     // tokens along best_path
    TokenId bonus = 0;
};

// Greedy tree verification. A node is accepted iff its token equals the
// target argmax given the committed context plus the node's ancestors; the
// result is the longest fully-accepted root path (ties: first in child
// order), so committed output is always exactly what target greedy would
// produce. Subtrees under a rejected node cannot extend an accepted prefix
// and are pruned from the walk.
inline VerifyResult verify(const LanguageModel& target, Context& ctx, const DraftTree& tree) {
    ProbVector root_dist = target.forward(ctx);
    TokenId root_greedy = argmax(root_dist);

    int best_node = -1;
    int best_depth = 0;

    auto dfs = [&](auto&& self, int idx, TokenId greedy_here) -> void {
        const DraftTree::Node& n = tree.node(idx);
        if (n.token != greedy_here) {
            return;
        }
        if (n.level > best_depth) {
            best_depth = n.level;
            best_node = idx;
        }
        if (tree.children(idx).empty()) {
            return;
        }
        ctx.push_token(n.token);
        ProbVector dist = target.forward(ctx);
        TokenId greedy_next = argmax(dist);
        for (int c : tree.children(idx)) {
            self(self, c, greedy_next);
        }
        ctx.pop_token();
    };
    for (int r : tree.root_children()) {
        dfs(dfs, r, root_greedy);
    }

    VerifyResult out;
    if (best_node < 0) {
        out.tau = 0;
        out.bonus = root_greedy;
        return out;
    }
    out.best_path = tree.path_to(best_node);
    out.tau = static_cast<int>(out.best_path.size());
    for (int idx : out.best_path) {
        out.accepted.push_back(tree.node(idx).token);
    }
    for (TokenId t : out.accepted) {
        ctx.push_token(t);
    }
    out.bonus = argmax(target.forward(ctx));
    for (std::size_t i = 0; i < out.accepted.size(); ++i) {
        ctx.pop_token();
    }
    return out;
}

} // namespace sage
