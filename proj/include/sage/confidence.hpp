#pragma once

#include <cmath>
#include <stdexcept>

#include "sage/prob.hpp"

namespace sage {

// Top-k slice of p, renormalized to sum 1, in rank order (descending prob,
// ties by lower id). When fewer than k entries are positive the zeros stay;
// they contribute nothing to entropy.
inline ProbVector topk_renormalize(const ProbVector& p, int k) {
    if (k < 2 || static_cast<std::size_t>(k) > p.size()) {
        throw std::invalid_argument("topk_renormalize: need 2 <= k <= vocab size");
    }
    auto ranked = top_ranked(p, static_cast<std::size_t>(k));
    std::vector<double> w(ranked.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        w[i] = ranked[i].prob;
    }
    return ProbVector(std::move(w));
}

// alpha = 1 - H(topk(p)) / ln k, clamped to [0, 1]. High alpha means the
// model is confident (mass concentrated), low alpha means near-uniform.
inline double confidence_alpha(const ProbVector& p, int k) {
    double h = shannon_entropy(topk_renormalize(p, k));
    double a = 1.0 - h / std::log(static_cast<double>(k));
    if (a < 0.0) return 0.0;
    if (a > 1.0) return 1.0;
    return a;
}

} // namespace sage
