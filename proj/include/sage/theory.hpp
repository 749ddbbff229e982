#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sage/cost.hpp"
#include "sage/prob.hpp"
#include "sage/rng.hpp"

namespace sage {

// Parameters of the per-depth acceptance abstraction: depth-l acceptance
// probability p * gamma^(l-1) for chains, and q1 / i^beta for the i-th
// sibling in width analysis.
struct AcceptanceModel {
    double p = 0.5;
    double gamma = 1.0;
    double beta = 0.0;
    double q1 = 0.5;

    void validate() const {
        if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("AcceptanceModel: p must be in (0, 1]");
        if (!(gamma > 0.0) || gamma > 1.0) throw std::invalid_argument("AcceptanceModel: gamma must be in (0, 1]");
        if (beta < 0.0) throw std::invalid_argument("AcceptanceModel: beta must be >= 0");
        if (!(q1 > 0.0) || q1 > 1.0) throw std::invalid_argument("AcceptanceModel: q1 must be in (0, 1]");
    }
};

// linear confidence-to-probability bound: 1/k + alpha * (k-1)/k
inline double p1_lower_bound(double alpha, int k) {
    if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("p1_lower_bound: alpha outside [0, 1]");
    if (k < 2) throw std::invalid_argument("p1_lower_bound: k must be >= 2");
    return 1.0 / k + alpha * (k - 1.0) / k;
}

namespace detail {

// Minimum entropy achievable by a distribution on the k-simplex whose
// largest entry is exactly p1: concentrate greedily, floor(1/p1) entries at
// p1 plus the remainder. Continuous and strictly decreasing in p1.
inline double min_entropy_at_p1(double p1, int k) {
    int m = static_cast<int>(std::floor(1.0 / p1 + 1e-12));
    if (m > k) m = k;
    double r = 1.0 - m * p1;
    if (r < 0.0) r = 0.0;
    double h = -m * p1 * std::log(p1);
    if (r > 0.0) h -= r * std::log(r);
    return h;
}

} // namespace detail

// True constrained minimum of the top probability over k-simplex
// distributions with entropy (1-alpha)*ln k, found by bisection on the
// monotone feasibility predicate. This is the independent check the linear
// bound above is audited against.
inline double min_p1_given_alpha(double alpha, int k) {
    if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("min_p1_given_alpha: alpha outside [0, 1]");
    if (k < 2) throw std::invalid_argument("min_p1_given_alpha: k must be >= 2");
    double target = (1.0 - alpha) * std::log(static_cast<double>(k));
    if (!(target >= 0.0) || !std::isfinite(target)) {
        throw std::invalid_argument("min_p1_given_alpha: infeasible entropy target");
    }
    double lo = 1.0 / k;
    if (detail::min_entropy_at_p1(lo, k) <= target) {
        return lo;                              // only the uniform endpoint reaches ln k
    }
    if (target <= 0.0) {
        return 1.0;
    }
    double hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (detail::min_entropy_at_p1(mid, k) <= target) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

// witness distribution achieving (approximately) the constrained minimum:
// greedy concentration at min_p1, descending order
inline std::vector<double> min_p1_witness(double alpha, int k) {
    double p1 = min_p1_given_alpha(alpha, k);
    std::vector<double> w;
    double rest = 1.0;
    for (int i = 0; i < k; ++i) {
        double x = std::min(p1, rest);
        if (x < 0.0) x = 0.0;
        w.push_back(x);
        rest -= x;
    }
    return w;
}

// confidence threshold above which greedy acceptance is claimed sufficient
inline double acceptance_threshold(int k, double epsilon) {
    if (k < 2) throw std::invalid_argument("acceptance_threshold: k must be >= 2");
    if (epsilon < 0.0 || epsilon > 0.25) throw std::invalid_argument("acceptance_threshold: epsilon outside [0, 0.25]");
    return (k - 2.0 + 4.0 * epsilon * k) / (2.0 * (k - 1.0));
}

struct AdversarialResult {
    bool guaranteed = true;        // no argmax flip found under the TV budget
    bool above_threshold = false;  // whether alpha actually exceeds the claimed threshold
    double alpha = 0.0;
    double threshold = 0.0;
    double draft_alpha = 0.0;      // realized confidence of the constructed draft
    double tv = 0.0;               // realized TV distance of the constructed pair
    std::vector<double> draft;
    std::vector<double> target;
};

// Worst-case construction for the sufficiency claim: draft is the minimum-p1
// distribution at the requested confidence, target moves min(epsilon, p1)
// mass from the draft argmax to the runner-up. An argmax flip under that
// budget is a counterexample; the result records it either way.
inline AdversarialResult adversarial_acceptance_search(int k, double epsilon, double alpha) {
    AdversarialResult res;
    res.alpha = alpha;
    res.threshold = acceptance_threshold(k, epsilon);
    res.above_threshold = alpha > res.threshold;
    res.draft = min_p1_witness(alpha, k);

    ProbVector draft_p(res.draft);
    res.draft_alpha = 1.0 - shannon_entropy(draft_p) / std::log(static_cast<double>(k));

    double m = std::min(epsilon, res.draft[0]);
    res.target = res.draft;
    res.target[0] -= m;
    res.target[1] += m;
    res.tv = m;
    // draft argmax is index 0 by construction (ties resolve to lowest id)
    res.guaranteed = !(res.target[1] > res.target[0]);
    return res;
}

// chain acceptance-length formula: sum over depths of p^l * gamma^(l(l-1)/2)
inline double expected_tau_closed_form(const AcceptanceModel& model, int depth) {
    model.validate();
    if (depth < 1) throw std::invalid_argument("expected_tau_closed_form: depth must be >= 1");
    double sum = 0.0;
    for (int l = 1; l <= depth; ++l) {
        sum += std::pow(model.p, l) * std::pow(model.gamma, 0.5 * l * (l - 1));
    }
    return sum;
}

// independent oracle: enumerate all 2^depth accept/reject outcomes with
// their exact probabilities and average the accepted prefix length
inline double expected_tau_enumeration(const AcceptanceModel& model, int depth) {
    model.validate();
    if (depth < 1 || depth > 25) throw std::invalid_argument("expected_tau_enumeration: depth outside [1, 25]");
    std::vector<double> a(static_cast<std::size_t>(depth));
    for (int l = 1; l <= depth; ++l) {
        a[static_cast<std::size_t>(l - 1)] = model.p * std::pow(model.gamma, l - 1);
    }
    double e = 0.0;
    std::uint64_t total = std::uint64_t(1) << depth;
    for (std::uint64_t bits = 0; bits < total; ++bits) {
        double prob = 1.0;
        int tau = 0;
        bool counting = true;
        for (int l = 0; l < depth; ++l) {
            bool acc = (bits >> l) & 1;
            prob *= acc ? a[static_cast<std::size_t>(l)] : 1.0 - a[static_cast<std::size_t>(l)];
            if (counting && acc) {
                ++tau;
            } else {
                counting = false;
            }
        }
        e += prob * tau;
    }
    return e;
}

// same expectation through the first-rejection decomposition
// sum_l l * P(tau = l); used for the telescoping identity check
inline double expected_tau_direct_sum(const AcceptanceModel& model, int depth) {
    model.validate();
    if (depth < 1) throw std::invalid_argument("expected_tau_direct_sum: depth must be >= 1");
    double e = 0.0;
    double prefix = 1.0;
    for (int l = 1; l <= depth; ++l) {
        double a_l = model.p * std::pow(model.gamma, l - 1);
        prefix *= a_l;
        double a_next = l < depth ? model.p * std::pow(model.gamma, l) : 0.0;
        e += l * prefix * (1.0 - a_next);
    }
    return e;
}

struct MonteCarloEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

inline MonteCarloEstimate expected_tau_monte_carlo(const AcceptanceModel& model, int depth,
                                                   std::int64_t trials, std::uint64_t seed) {
    model.validate();
    if (depth < 1) throw std::invalid_argument("expected_tau_monte_carlo: depth must be >= 1");
    if (trials < 1) throw std::invalid_argument("expected_tau_monte_carlo: trials must be >= 1");
    std::vector<double> a(static_cast<std::size_t>(depth));
    for (int l = 1; l <= depth; ++l) {
        a[static_cast<std::size_t>(l - 1)] = model.p * std::pow(model.gamma, l - 1);
    }
    // Separate the stream per (p, gamma, depth) so estimates for different
    // points never share draws; a shared stream would make one unlucky draw
    // show up as a correlated error across the whole grid.
    std::uint64_t stream = mix64(seed ^ 0x6d63746175ull);
    stream = mix64(stream ^ std::bit_cast<std::uint64_t>(model.p));
    stream = mix64(stream ^ std::bit_cast<std::uint64_t>(model.gamma));
    stream = mix64(stream ^ (static_cast<std::uint64_t>(depth) * 0x9e3779b97f4a7c15ull));
    Rng rng(stream);
    long double sum = 0.0L;
    long double sumsq = 0.0L;
    for (std::int64_t t = 0; t < trials; ++t) {
        int tau = 0;
        for (int l = 0; l < depth; ++l) {
            if (rng.next_double() < a[static_cast<std::size_t>(l)]) {
                ++tau;
            } else {
                break;
            }
        }
        sum += tau;
        sumsq += static_cast<long double>(tau) * tau;
    }
    MonteCarloEstimate est;
    est.mean = static_cast<double>(sum / trials);
    if (trials > 1) {
        long double var = (sumsq - trials * static_cast<long double>(est.mean) * est.mean) / (trials - 1);
        if (var < 0.0L) var = 0.0L;
        est.std_error = static_cast<double>(std::sqrt(static_cast<double>(var) / trials));
    }
    return est;
}

// tokens per unit work for one round: (e_tau + 1) / (c_d * |T| + c_t)
inline double speedup(double e_tau, int tree_size, const CostModel& cost) {
    cost.validate();
    if (tree_size < 0) throw std::invalid_argument("speedup: negative tree size");
    return (e_tau + 1.0) / (cost.c_d * tree_size + cost.c_t);
}

struct OptimalDepth {
    int d_main = 1;       // floor(log(c_t/c_d) / log(1/p) - 1)
    int d_appendix = 1;   // floor(log(c_t/c_d) / log(1/p)), one deeper
    bool unbounded = false;
};

// Both published closed forms for the optimal chain depth; they differ by
// one, so both are returned and benchmarked against brute force elsewhere.
// The 1e-9 nudge keeps floor() stable when the log ratio lands on an exact
// integer.
inline OptimalDepth optimal_depth_closed_form(double p, const CostModel& cost) {
    cost.validate();
    if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("optimal_depth_closed_form: p outside (0, 1]");
    if (!(cost.c_t > cost.c_d)) throw std::invalid_argument("optimal_depth_closed_form: requires c_t > c_d");
    OptimalDepth out;
    if (p == 1.0) {
        out.unbounded = true;
        out.d_main = out.d_appendix = -1;
        return out;
    }
    double x = std::log(cost.c_t / cost.c_d) / std::log(1.0 / p);
    out.d_appendix = std::max(1, static_cast<int>(std::floor(x + 1e-9)));
    out.d_main = std::max(1, static_cast<int>(std::floor(x - 1.0 + 1e-9)));
    return out;
}

inline int optimal_depth_brute_force(double p, double gamma, const CostModel& cost, int d_max_search) {
    if (d_max_search < 1) throw std::invalid_argument("optimal_depth_brute_force: search bound must be >= 1");
    AcceptanceModel m;
    m.p = p;
    m.gamma = gamma;
    int best_d = 1;
    double best_s = -1.0;
    for (int d = 1; d <= d_max_search; ++d) {
        double s = speedup(expected_tau_closed_form(m, d), d, cost);
        if (s > best_s) {
            best_s = s;
            best_d = d;
        }
    }
    return best_d;
}

// expected accepted mass of a width-W sibling set, clamped at 1 since the
// acceptance events are mutually exclusive
inline double width_acceptance_sum(double q1, double beta, int width) {
    double s = 0.0;
    for (int i = 1; i <= width; ++i) {
        s += q1 / std::pow(static_cast<double>(i), beta);
    }
    return std::min(1.0, s);
}

inline int optimal_width_brute_force(double q1, double beta, const CostModel& cost, int w_max_search) {
    if (!(q1 > 0.0) || q1 > 1.0) throw std::invalid_argument("optimal_width_brute_force: q1 outside (0, 1]");
    if (beta < 0.0) throw std::invalid_argument("optimal_width_brute_force: beta must be >= 0");
    if (w_max_search < 1) throw std::invalid_argument("optimal_width_brute_force: search bound must be >= 1");
    cost.validate();
    int best_w = 1;
    double best_s = -1.0;
    for (int w = 1; w <= w_max_search; ++w) {
        double s = (width_acceptance_sum(q1, beta, w) + 1.0) / (cost.c_d * w + cost.c_t);
        if (s > best_s) {
            best_s = s;
            best_w = w;
        }
    }
    return best_w;
}

// chained sufficiency: every step's confidence must clear the threshold
inline bool multi_step_acceptance(const std::vector<double>& alphas, int k, double epsilon) {
    double thr = acceptance_threshold(k, epsilon);
    for (double a : alphas) {
        if (a < 0.0 || a > 1.0) throw std::invalid_argument("multi_step_acceptance: alpha outside [0, 1]");
        if (!(a > thr)) {
            return false;
        }
    }
    return true;
}

} // namespace sage
