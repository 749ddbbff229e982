#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace sage {

using TokenId = std::int32_t;

// Discrete distribution over token ids 0..size-1. Construction normalizes,
// so downstream code can rely on sum == 1 within float tolerance.
class ProbVector {
public:
    ProbVector() = default;

    explicit ProbVector(std::vector<double> weights) : p_(std::move(weights)) {
        if (p_.empty()) {
            throw std::invalid_argument("ProbVector: empty weight vector");
        }
        double sum = 0.0;
        for (double w : p_) {
            if (!(w >= 0.0) || !std::isfinite(w)) {
                throw std::invalid_argument("ProbVector: weights must be finite and non-negative");
            }
            sum += w;
        }
        if (sum <= 0.0) {
            throw std::invalid_argument("ProbVector: weights sum to zero");
        }
        for (double& w : p_) {
            w /= sum;
        }
    }

    std::size_t size() const { return p_.size(); }
    double operator[](std::size_t i) const { return p_[i]; }
    const std::vector<double>& values() const { return p_; }

    double sum() const {
        return std::accumulate(p_.begin(), p_.end(), 0.0);
    }

private:
    std::vector<double> p_;
};

// natural-log entropy, 0*log(0) taken as 0
inline double shannon_entropy(const ProbVector& p) {
    double h = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) {
            h -= p[i] * std::log(p[i]);
        }
    }
    return h < 0.0 ? 0.0 : h;
}

// total variation distance, 0.5 * L1
inline double tv_distance(const ProbVector& p, const ProbVector& q) {
    if (p.size() != q.size()) {
        throw std::invalid_argument("tv_distance: size mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        acc += std::fabs(p[i] - q[i]);
    }
    return 0.5 * acc;
}

// ties broken toward the lowest token id
inline TokenId argmax(const ProbVector& p) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.size(); ++i) {
        if (p[i] > p[best]) {
            best = i;
        }
    }
    return static_cast<TokenId>(best);
}

struct RankedToken {
    TokenId id;
    double prob;
};

// top n entries by probability, descending; ties by lower id. n may exceed
// the support size only if it still fits the vector.
inline std::vector<RankedToken> top_ranked(const ProbVector& p, std::size_t n) {
    if (n == 0 || n > p.size()) {
        throw std::invalid_argument("top_ranked: n out of range");
    }
    std::vector<TokenId> idx(p.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + n, idx.end(), [&](TokenId a, TokenId b) {
        if (p[a] != p[b]) return p[a] > p[b];
        return a < b;
    });
    std::vector<RankedToken> out;
    out.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        out.push_back({idx[r], p[static_cast<std::size_t>(idx[r])]});
    }
    return out;
}

} // namespace sage
