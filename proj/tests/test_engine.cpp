#include <catch2/catch_amalgamated.hpp>

#include "sage/engine.hpp"
#include "sage/model_spec.hpp"

using namespace sage;

namespace {

ModelPair coupled(double eps, int vocab, std::uint64_t seed) {
    ModelSpec spec;
    spec.kind = "coupled_pair";
    spec.vocab_size = vocab;
    spec.epsilon = eps;
    return make_model_pair(spec, seed);
}

} // namespace

TEST_CASE("every decode mode reproduces target greedy output exactly") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        ModelPair pair = coupled(0.08, 12, seed);
        Context prompt(0, {1, 2});
        std::vector<TokenId> ref = greedy_reference(*pair.target, prompt, 40);
        REQUIRE(ref.size() == 40);
        EngineOptions opts;
        for (DecodeMode mode : {DecodeMode::vanilla_ar, DecodeMode::sd_chain,
                                DecodeMode::sd_tree, DecodeMode::sage}) {
            DecodeTrace t = baseline_decode(mode, *pair.draft, *pair.target, prompt, 40, opts);
            INFO("mode " << decode_mode_name(mode) << " seed " << seed);
            REQUIRE(t.output == ref);
        }
    }
}

TEST_CASE("token accounting is consistent within each trace") {
    ModelPair pair = coupled(0.05, 20, 7);
    Context prompt(0);
    EngineOptions opts;
    DecodeTrace t = sage_decode(*pair.draft, *pair.target, prompt, 64, opts);

    REQUIRE(t.tokens() == 64);
    int committed = 0;
    for (const auto& r : t.records) {
        committed += r.committed_tokens;
        REQUIRE(r.tau >= 0);
        REQUIRE(r.committed_tokens >= 1);
        REQUIRE(r.committed_tokens <= r.tau + 1);
        REQUIRE(r.node_count <= opts.adaptive.n_max);
        REQUIRE(r.depth_used <= r.effective_d_max);
        REQUIRE(r.effective_d_max >= opts.adaptive.d_min);
        REQUIRE(r.effective_d_max <= opts.adaptive.d_max);
        REQUIRE(r.target_cost_units == 1.0);
        REQUIRE(r.draft_cost_units == static_cast<double>(r.node_count));
        REQUIRE(r.alpha_used >= 0.0);
        REQUIRE(r.alpha_used <= 1.0);
    }
    REQUIRE(committed == 64);
    for (std::size_t i = 0; i < t.records.size(); ++i) {
        REQUIRE(t.records[i].step_index == static_cast<int>(i));
    }
}

TEST_CASE("first round uses the seed template at alpha one half") {
    ModelPair pair = coupled(0.0, 30, 4);
    Context prompt(0);
    EngineOptions opts;
    DecodeTrace t = sage_decode(*pair.draft, *pair.target, prompt, 32, opts);
    REQUIRE(t.records.front().alpha_used == 0.5);
    REQUIRE(t.records.front().node_count == 18);
    REQUIRE(t.records.front().depth_used == 6);
    REQUIRE(t.records.front().width_used == 4);
    REQUIRE(t.records.front().effective_d_max == 8);

    // later rounds derive their shape from measured confidence
    REQUIRE(t.records.size() > 1);
    for (std::size_t i = 1; i < t.records.size(); ++i) {
        const auto& r = t.records[i];
        REQUIRE(r.depth_used >= opts.adaptive.d_min);
        REQUIRE(r.width_used >= opts.adaptive.w_min);
        REQUIRE(r.width_used <= opts.adaptive.w_max);
    }
}

TEST_CASE("a lowered depth cap prunes the first-round template") {
    ModelPair pair = coupled(0.0, 30, 4);
    Context prompt(0);
    EngineOptions opts;
    opts.adaptive.d_max = 4;   // template depth 6 must be cut to 4
    DecodeTrace t = sage_decode(*pair.draft, *pair.target, prompt, 16, opts);
    REQUIRE(t.records.front().depth_used == 4);
    REQUIRE(t.records.front().node_count < 18);
}

TEST_CASE("eos stops decoding mid-round") {
    ModelPair pair = coupled(0.05, 10, 11);
    Context prompt(0);
    std::vector<TokenId> ref = greedy_reference(*pair.target, prompt, 30);
    TokenId eos = ref[5];
    std::size_t cut = 0;
    while (ref[cut] != eos) ++cut;

    EngineOptions opts;
    opts.eos = eos;
    std::vector<TokenId> ref_eos = greedy_reference(*pair.target, prompt, 30, eos);
    REQUIRE(ref_eos.size() == cut + 1);
    REQUIRE(ref_eos.back() == eos);

    for (DecodeMode mode : {DecodeMode::vanilla_ar, DecodeMode::sd_chain,
                            DecodeMode::sd_tree, DecodeMode::sage}) {
        DecodeTrace t = baseline_decode(mode, *pair.draft, *pair.target, prompt, 30, opts);
        INFO("mode " << decode_mode_name(mode));
        REQUIRE(t.output == ref_eos);
    }
}

TEST_CASE("identical draft accepts the full chain every round") {
    ModelPair pair = coupled(0.0, 25, 2);
    Context prompt(0);
    EngineOptions opts;
    opts.chain_depth = 4;
    DecodeTrace t = baseline_decode(DecodeMode::sd_chain, *pair.draft, *pair.target, prompt, 20, opts);
    REQUIRE(t.rounds() == 4);   // 5 tokens per round
    for (const auto& r : t.records) {
        REQUIRE(r.tau == 4);
        REQUIRE(r.node_count == 4);
        REQUIRE(r.depth_used == 4);
        REQUIRE(r.width_used == 1);
    }
}

TEST_CASE("vanilla mode is one target step per token") {
    ModelPair pair = coupled(0.3, 10, 9);
    Context prompt(0);
    EngineOptions opts;
    DecodeTrace t = baseline_decode(DecodeMode::vanilla_ar, *pair.draft, *pair.target, prompt, 15, opts);
    REQUIRE(t.rounds() == 15);
    for (const auto& r : t.records) {
        REQUIRE(r.tau == 0);
        REQUIRE(r.node_count == 0);
        REQUIRE(r.draft_cost_units == 0.0);
        REQUIRE(r.committed_tokens == 1);
    }
    REQUIRE(t.total_target_units() == 15.0);
}

TEST_CASE("per-level draft cost charges tree depth instead of node count") {
    ModelPair pair = coupled(0.05, 20, 7);
    Context prompt(0);
    EngineOptions opts;
    opts.draft_cost_mode = DraftCostMode::per_level;
    DecodeTrace t = sage_decode(*pair.draft, *pair.target, prompt, 32, opts);
    for (const auto& r : t.records) {
        REQUIRE(r.draft_cost_units <= r.depth_used);
        REQUIRE(r.draft_cost_units >= 1.0);
    }
}

TEST_CASE("decoding is deterministic end to end") {
    ModelPair pair = coupled(0.07, 18, 13);
    Context prompt(0, {3});
    EngineOptions opts;
    DecodeTrace a = sage_decode(*pair.draft, *pair.target, prompt, 48, opts);
    DecodeTrace b = sage_decode(*pair.draft, *pair.target, prompt, 48, opts);
    REQUIRE(a.output == b.output);
    REQUIRE(a.rounds() == b.rounds());
    for (int i = 0; i < a.rounds(); ++i) {
        REQUIRE(a.records[i].alpha_used == b.records[i].alpha_used);
        REQUIRE(a.records[i].node_count == b.records[i].node_count);
        REQUIRE(a.records[i].tau == b.records[i].tau);
    }
}

TEST_CASE("engine option validation") {
    ModelPair pair = coupled(0.0, 10, 1);
    Context prompt(0);
    EngineOptions opts;
    opts.adaptive.n_max = 10;   // smaller than the 18-slot template
    REQUIRE_THROWS_AS(sage_decode(*pair.draft, *pair.target, prompt, 8, opts), ConfigError);
    EngineOptions ok;
    REQUIRE_THROWS_AS(sage_decode(*pair.draft, *pair.target, prompt, 0, ok), ConfigError);
    REQUIRE_THROWS_AS(greedy_reference(*pair.target, prompt, 0), ConfigError);
}

TEST_CASE("entropy schedule models run losslessly through the engine") {
    ModelSpec spec;
    spec.kind = "entropy_schedule";
    spec.vocab_size = 30;
    spec.pair_epsilon = 0.1;
    spec.regimes = {{120, 0.5}, {120, 3.0}};
    ModelPair pair = make_model_pair(spec, 5);
    Context prompt(0);
    std::vector<TokenId> ref = greedy_reference(*pair.target, prompt, 80);
    EngineOptions opts;
    DecodeTrace t = sage_decode(*pair.draft, *pair.target, prompt, 80, opts);
    REQUIRE(t.output == ref);

    DecodeTrace chain = baseline_decode(DecodeMode::sd_chain, *pair.draft, *pair.target, prompt, 80, opts);
    REQUIRE(chain.output == ref);
}
