#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "sage/errors.hpp"
#include "sage/prob.hpp"
#include "sage/rng.hpp"

namespace sage {

// Token prefix a model conditions on. Keeps an incremental hash chain so
// seeded models can key their output on the exact prefix in O(1) per
// push/pop; tree walkers mutate one context instead of copying prefixes.
class Context {
public:
    explicit Context(std::uint64_t prompt_state = 0) : prompt_state_(prompt_state) {
        chain_.push_back(mix64(prompt_state ^ 0x53414745u));
    }

    Context(std::uint64_t prompt_state, const std::vector<TokenId>& tokens) : Context(prompt_state) {
        for (TokenId t : tokens) push_token(t);
    }

    void push_token(TokenId t) {
        tokens_.push_back(t);
        chain_.push_back(mix64(chain_.back() ^ (static_cast<std::uint64_t>(t) + 0x9e3779b9u)));
    }

    void pop_token() {
        if (tokens_.empty()) {
            throw std::out_of_range("Context: pop on empty prefix");
        }
        tokens_.pop_back();
        chain_.pop_back();
    }

    std::size_t size() const { return tokens_.size(); }
    const std::vector<TokenId>& tokens() const { return tokens_; }
    std::uint64_t prompt_state() const { return prompt_state_; }

    // hash of (prompt_state, full prefix); equal prefixes hash equal
    std::uint64_t state_hash() const { return chain_.back(); }

private:
    std::uint64_t prompt_state_;
    std::vector<TokenId> tokens_;
    std::vector<std::uint64_t> chain_;
};

// A model is a pure function context -> distribution over the next token.
class LanguageModel {
public:
    virtual ~LanguageModel() = default;

    int vocab_size() const { return vocab_; }
    std::int64_t max_context() const { return max_context_; }

    ProbVector forward(const Context& ctx) const {
        if (static_cast<std::int64_t>(ctx.size()) > max_context_) {
            throw ContextOverflowError("context length " + std::to_string(ctx.size()) +
                                       " exceeds model horizon " + std::to_string(max_context_));
        }
        return forward_impl(ctx);
    }

protected:
    LanguageModel(int vocab, std::int64_t max_context) : vocab_(vocab), max_context_(max_context) {
        if (vocab < 2) {
            throw ConfigError("model vocabulary must have at least 2 tokens");
        }
        if (max_context < 0) {
            throw ConfigError("model horizon must be non-negative");
        }
    }

    virtual ProbVector forward_impl(const Context& ctx) const = 0;

private:
    int vocab_;
    std::int64_t max_context_;
};

constexpr std::int64_t UNBOUNDED_CONTEXT = std::int64_t(1) << 40;

// Seeded random target: each distinct prefix gets an independent
// Dirichlet(1,...,1) draw, generated from exponentials keyed on the prefix
// hash. Same seed + same prefix => bitwise identical distribution.
class SeededTargetModel : public LanguageModel {
public:
    SeededTargetModel(int vocab, std::uint64_t seed, std::int64_t max_context = UNBOUNDED_CONTEXT)
        : LanguageModel(vocab, max_context), seed_(seed) {}

protected:
    ProbVector forward_impl(const Context& ctx) const override {
        Rng r(mix64(seed_ ^ ctx.state_hash()));
        std::vector<double> w(static_cast<std::size_t>(vocab_size()));
        for (double& x : w) {
            x = r.next_exponential();
        }
        return ProbVector(std::move(w));
    }

private:
    std::uint64_t seed_;
};

// Draft coupled to a base model: move min(epsilon, p_max) probability mass
// from the base argmax to a seeded alternative token. TV distance from the
// base is exactly the moved mass, so it never exceeds epsilon.
class PerturbedDraftModel : public LanguageModel {
public:
    PerturbedDraftModel(std::shared_ptr<const LanguageModel> base, double epsilon, std::uint64_t seed)
        : LanguageModel(base->vocab_size(), base->max_context()),
          base_(std::move(base)), epsilon_(epsilon), seed_(seed) {
        if (epsilon_ < 0.0 || epsilon_ > 1.0) {
            throw ConfigError("draft perturbation epsilon must be in [0, 1]");
        }
    }

protected:
    ProbVector forward_impl(const Context& ctx) const override {
        ProbVector p = base_->forward(ctx);
        if (epsilon_ == 0.0) {
            return p;
        }
        std::size_t top = static_cast<std::size_t>(argmax(p));
        double m = std::min(epsilon_, p[top]);
        Rng r(mix64(seed_ ^ mix64(ctx.state_hash() ^ 0x70657274u)));
        std::size_t alt = static_cast<std::size_t>(r.next_below(p.size() - 1));
        if (alt >= top) ++alt;
        std::vector<double> w = p.values();
        w[top] -= m;
        w[alt] += m;
        return ProbVector(std::move(w));
    }

private:
    std::shared_ptr<const LanguageModel> base_;
    double epsilon_;
    std::uint64_t seed_;
};

struct EntropyRegime {
    int steps;
    double target_entropy;
};

// Target whose per-position entropy follows a mean-reverting AR(1) path
// through configured regime blocks. Position t's distribution is a one-hot /
// uniform mixture whose entropy matches the scheduled value; the hot token
// is drawn independently per position. Depends on prefix length only.
class EntropyScheduleModel : public LanguageModel {
public:
    EntropyScheduleModel(int vocab, std::uint64_t seed, std::vector<EntropyRegime> regimes,
                         double phi, double sigma)
        : LanguageModel(vocab, horizon_of(regimes) - 1),
          seed_(seed) {
        if (!(phi > -1.0 && phi < 1.0)) {
            throw ConfigError("entropy schedule: AR(1) coefficient must be in (-1, 1)");
        }
        if (sigma < 0.0) {
            throw ConfigError("entropy schedule: sigma must be non-negative");
        }
        double h_max = std::log(static_cast<double>(vocab));
        for (const auto& reg : regimes) {
            if (reg.steps < 1) {
                throw ConfigError("entropy schedule: regime steps must be >= 1");
            }
            if (reg.target_entropy < 0.0 || reg.target_entropy > h_max) {
                throw ConfigError("entropy schedule: target entropy outside [0, ln vocab]");
            }
        }
        Rng noise(mix64(seed ^ 0x73636865u));
        double h = 0.0;
        bool first = true;
        for (const auto& reg : regimes) {
            double mu = reg.target_entropy;
            for (int s = 0; s < reg.steps; ++s) {
                if (first) {
                    double stat = sigma / std::sqrt(1.0 - phi * phi);
                    h = mu + stat * noise.next_gaussian();
                    first = false;
                } else {
                    h = mu + phi * (h - mu) + sigma * noise.next_gaussian();
                }
                double clamped = std::min(std::max(h, 0.0), h_max);
                schedule_.push_back(clamped);
                lambda_.push_back(solve_mixture(clamped, vocab));
                Rng pick(mix64(seed ^ mix64(0x686f74u ^ (static_cast<std::uint64_t>(schedule_.size()) * 0x9e3779b97f4a7c15ull))));
                hot_.push_back(static_cast<TokenId>(pick.next_below(static_cast<std::uint64_t>(vocab))));
            }
        }
    }

    std::int64_t horizon() const { return static_cast<std::int64_t>(schedule_.size()); }
    double scheduled_entropy(std::size_t t) const { return schedule_.at(t); }
    TokenId hot_token(std::size_t t) const { return hot_.at(t); }

protected:
    ProbVector forward_impl(const Context& ctx) const override {
        std::size_t t = ctx.size();
        double lam = lambda_[t];
        int v = vocab_size();
        std::vector<double> w(static_cast<std::size_t>(v), lam / v);
        w[static_cast<std::size_t>(hot_[t])] += 1.0 - lam;
        return ProbVector(std::move(w));
    }

private:
    static std::int64_t horizon_of(const std::vector<EntropyRegime>& regimes) {
        if (regimes.empty()) {
            throw ConfigError("entropy schedule: at least one regime required");
        }
        std::int64_t total = 0;
        for (const auto& r : regimes) total += r.steps;
        if (total < 1) {
            throw ConfigError("entropy schedule: empty horizon");
        }
        return total;
    }

    // entropy of (1-lam)*onehot + lam*uniform, increasing in lam
    static double mixture_entropy(double lam, int v) {
        double q = lam / v;
        double p1 = 1.0 - lam + q;
        double h = 0.0;
        if (p1 > 0.0) h -= p1 * std::log(p1);
        if (q > 0.0) h -= (v - 1) * q * std::log(q);
        return h;
    }

    static double solve_mixture(double target, int v) {
        double h_max = std::log(static_cast<double>(v));
        if (target <= 0.0) return 0.0;
        if (target >= h_max) return 1.0;
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 80; ++it) {
            double mid = 0.5 * (lo + hi);
            if (mixture_entropy(mid, v) < target) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    }

    std::uint64_t seed_;
    std::vector<double> schedule_;
    std::vector<double> lambda_;
    std::vector<TokenId> hot_;
};

// whitespace tokenizer with a persistable token <-> id table; ids follow
// first appearance order in the source text
struct VocabTable {
    std::vector<std::string> id_to_token;
    std::map<std::string, TokenId> token_to_id;

    static VocabTable build(const std::string& text) {
        VocabTable v;
        std::istringstream in(text);
        std::string tok;
        while (in >> tok) {
            if (v.token_to_id.find(tok) == v.token_to_id.end()) {
                TokenId id = static_cast<TokenId>(v.id_to_token.size());
                v.id_to_token.push_back(tok);
                v.token_to_id.emplace(tok, id);
            }
        }
        return v;
    }

    int size() const { return static_cast<int>(id_to_token.size()); }

    TokenId id(const std::string& tok) const {
        auto it = token_to_id.find(tok);
        if (it == token_to_id.end()) {
            throw ConfigError("vocab table: unknown token '" + tok + "'");
        }
        return it->second;
    }

    std::vector<TokenId> encode(const std::string& text) const {
        std::vector<TokenId> out;
        std::istringstream in(text);
        std::string tok;
        while (in >> tok) {
            out.push_back(id(tok));
        }
        return out;
    }

    nlohmann::json to_json() const {
        return nlohmann::json{{"schema", 1}, {"tokens", id_to_token}};
    }

    static VocabTable from_json(const nlohmann::json& j) {
        if (!j.is_object() || !j.contains("tokens") || !j.at("tokens").is_array()) {
            throw ConfigError("vocab table: expected {\"tokens\": [...]}");
        }
        VocabTable v;
        for (const auto& e : j.at("tokens")) {
            std::string tok = e.get<std::string>();
            if (v.token_to_id.count(tok)) {
                throw ConfigError("vocab table: duplicate token '" + tok + "'");
            }
            TokenId id = static_cast<TokenId>(v.id_to_token.size());
            v.id_to_token.push_back(tok);
            v.token_to_id.emplace(tok, id);
        }
        return v;
    }
};

// Add-one smoothed n-gram counts. Histories shorter than order-1 (early
// context) are counted and looked up at their actual length, so short
// prompts still get trained statistics; unseen histories fall back to the
// uniform add-one prior automatically.
class NgramModel : public LanguageModel {
public:
    NgramModel(const std::vector<TokenId>& corpus, int order, int vocab)
        : LanguageModel(vocab, UNBOUNDED_CONTEXT), order_(order) {
        if (order < 1) {
            throw ConfigError("n-gram order must be >= 1");
        }
        if (corpus.empty()) {
            throw ConfigError("n-gram training corpus is empty");
        }
        if (static_cast<int>(corpus.size()) < order) {
            throw ConfigError("n-gram training corpus shorter than model order");
        }
        for (TokenId t : corpus) {
            if (t < 0 || t >= vocab) {
                throw ConfigError("n-gram corpus token id outside vocabulary");
            }
        }
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            std::size_t h = std::min<std::size_t>(i, static_cast<std::size_t>(order - 1));
            std::vector<TokenId> hist(corpus.begin() + (i - h), corpus.begin() + i);
            auto& row = counts_[hist];
            if (row.empty()) {
                row.assign(static_cast<std::size_t>(vocab), 0);
            }
            ++row[static_cast<std::size_t>(corpus[i])];
            ++totals_[hist];
        }
    }

    int order() const { return order_; }

protected:
    ProbVector forward_impl(const Context& ctx) const override {
        std::size_t h = std::min<std::size_t>(ctx.size(), static_cast<std::size_t>(order_ - 1));
        const auto& toks = ctx.tokens();
        std::vector<TokenId> hist(toks.end() - h, toks.end());
        int v = vocab_size();
        std::vector<double> w(static_cast<std::size_t>(v), 1.0);
        auto it = counts_.find(hist);
        if (it != counts_.end()) {
            for (int i = 0; i < v; ++i) {
                w[static_cast<std::size_t>(i)] += it->second[static_cast<std::size_t>(i)];
            }
        }
        return ProbVector(std::move(w));
    }

private:
    struct VecHash {
        std::size_t operator()(const std::vector<TokenId>& v) const {
            std::uint64_t h = 0x6e6772616dull;
            for (TokenId t : v) {
                h = mix64(h ^ static_cast<std::uint64_t>(t));
            }
            return static_cast<std::size_t>(h);
        }
    };

    int order_;
    std::unordered_map<std::vector<TokenId>, std::vector<std::uint32_t>, VecHash> counts_;
    std::unordered_map<std::vector<TokenId>, std::uint64_t, VecHash> totals_;
};

} // namespace sage
