#pragma once

#include <cmath>
#include <deque>
#include <numeric>

#include "sage/errors.hpp"

namespace sage {

// Knobs for the adaptive decoder. Defaults follow the reference operating
// point; validate() is the single gate for user-supplied values.
struct AdaptiveConfig {
    int d_min = 3;
    int d_max = 8;
    int w_min = 2;
    int w_max = 10;
    int k = 10;                     // top-k slice used for confidence
    int n_max = 64;                 // node budget per draft tree
    int window = 10;                // tau history length
    double lower_threshold = 2.0;   // mean tau below this shrinks depth cap
    double upper_threshold = 3.0;   // mean tau above this grows it back

    void validate() const {
        if (d_min < 1 || d_max < d_min) throw ConfigError("depth range invalid: need 1 <= d_min <= d_max");
        if (w_min < 1 || w_max < w_min) throw ConfigError("width range invalid: need 1 <= w_min <= w_max");
        if (k < 2) throw ConfigError("k must be >= 2");
        if (n_max < 1) throw ConfigError("n_max must be >= 1");
        if (window < 1) throw ConfigError("window must be >= 1");
        if (!(lower_threshold <= upper_threshold)) throw ConfigError("tau thresholds must satisfy lower <= upper");
    }
};

inline int round_half_up(double x) {
    return static_cast<int>(std::floor(x + 0.5));
}

// depth command: d_min + alpha * (cap - d_min), rounded, clamped to the cap
inline int depth_for(double alpha, const AdaptiveConfig& cfg, int effective_d_max) {
    int d = round_half_up(cfg.d_min + alpha * (effective_d_max - cfg.d_min));
    if (d < cfg.d_min) d = cfg.d_min;
    if (d > effective_d_max) d = effective_d_max;
    return d;
}

// width command moves opposite to confidence: w_min + (1 - alpha) * range
inline int width_for(double alpha, const AdaptiveConfig& cfg) {
    int w = round_half_up(cfg.w_min + (1.0 - alpha) * (cfg.w_max - cfg.w_min));
    if (w < cfg.w_min) w = cfg.w_min;
    if (w > cfg.w_max) w = cfg.w_max;
    return w;
}

// per-level fan-out: base * (1/level) * (0.5 + parent_prob), at least 1,
// never above base (the cap only binds at level 1 where the factor can
// exceed 1)
inline int level_width(int base_width, int level, double parent_prob) {
    double raw = base_width * (1.0 / level) * (0.5 + parent_prob);
    int w = round_half_up(raw);
    if (w > base_width) w = base_width;
    if (w < 1) w = 1;
    return w;
}

// inclusion threshold rises with level: candidates deep in the tree must be
// progressively more probable to be worth drafting
inline double level_threshold(int level, int depth) {
    if (level < 1 || level > depth) throw ConfigError("level_threshold: need 1 <= level <= depth");
    return 0.1 * static_cast<double>(level) / static_cast<double>(depth);
}

// Sliding window over accepted-length observations. Once the window fills,
// each new observation may nudge the effective depth cap: persistently short
// acceptances shrink it, persistently long ones grow it back, and a mean
// inside [lower, upper] leaves it alone (hysteresis band).
class TauHistory {
public:
    explicit TauHistory(const AdaptiveConfig& cfg)
        : cfg_(cfg), effective_d_max_(cfg.d_max) {}

    TauHistory(const AdaptiveConfig& cfg, int initial_effective)
        : cfg_(cfg), effective_d_max_(initial_effective) {
        if (initial_effective < cfg.d_min || initial_effective > cfg.d_max) {
            throw ConfigError("TauHistory: initial effective depth outside [d_min, d_max]");
        }
    }

    void observe(int tau) {
        window_.push_back(tau);
        if (window_.size() > static_cast<std::size_t>(cfg_.window)) {
            window_.pop_front();
        }
        if (window_.size() < static_cast<std::size_t>(cfg_.window)) {
            return;
        }
        double mean = std::accumulate(window_.begin(), window_.end(), 0.0) / window_.size();
        if (mean < cfg_.lower_threshold && effective_d_max_ > cfg_.d_min) {
            --effective_d_max_;
        } else if (mean > cfg_.upper_threshold && effective_d_max_ < cfg_.d_max) {
            ++effective_d_max_;
        }
    }

    int effective_d_max() const { return effective_d_max_; }
    std::size_t observed() const { return window_.size(); }

private:
    AdaptiveConfig cfg_;
    std::deque<int> window_;
    int effective_d_max_;
};

} // namespace sage
