#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "map_model.hpp"
#include "sage/verifier.hpp"

using namespace sage;
using sage::testing::MapModel;

namespace {

// wraps a model and records every prefix it is asked about
class RecordingModel : public LanguageModel {
public:
    explicit RecordingModel(const LanguageModel& inner)
        : LanguageModel(inner.vocab_size(), inner.max_context()), inner_(inner) {}

    mutable std::vector<std::vector<TokenId>> queried;

protected:
    ProbVector forward_impl(const Context& ctx) const override {
        queried.push_back(ctx.tokens());
        return inner_.forward(ctx);
    }

private:
    const LanguageModel& inner_;
};

MapModel greedy_target() {
    // greedy chain from the empty prefix: 1, 0, 2, 2
    return MapModel(4, {
        {{}, {0.1, 0.5, 0.2, 0.2}},
        {{1}, {0.6, 0.1, 0.2, 0.1}},
        {{1, 0}, {0.1, 0.1, 0.7, 0.1}},
        {{1, 0, 2}, {0.25, 0.25, 0.3, 0.2}},
    });
}

} // namespace

TEST_CASE("verifier accepts the greedy path and returns the bonus token") {
    MapModel target = greedy_target();
    DraftTree tree(16);
    int a = tree.add_child(DraftTree::NO_PARENT, 0, 0.4);   // rejected: greedy is 1
    tree.add_child(a, 2, 0.5);                              // unreachable
    int b = tree.add_child(DraftTree::NO_PARENT, 1, 0.4);   // accepted
    int c = tree.add_child(b, 0, 0.5);                      // accepted
    tree.add_child(b, 3, 0.2);                              // rejected
    int d = tree.add_child(c, 2, 0.6);                      // accepted
    tree.add_child(c, 1, 0.2);                              // rejected

    Context ctx(0);
    VerifyResult vr = verify(target, ctx, tree);
    REQUIRE(vr.tau == 3);
    REQUIRE(vr.accepted == std::vector<TokenId>{1, 0, 2});
    REQUIRE(vr.best_path == std::vector<int>{b, c, d});
    REQUIRE(vr.bonus == 2);
    REQUIRE(ctx.size() == 0);
}

TEST_CASE("verifier never explores below a rejected node") {
    MapModel target = greedy_target();
    RecordingModel spy(target);
    DraftTree tree(16);
    int a = tree.add_child(DraftTree::NO_PARENT, 0, 0.4);   // rejected root child
    int a2 = tree.add_child(a, 1, 0.3);
    tree.add_child(a2, 1, 0.3);
    int b = tree.add_child(DraftTree::NO_PARENT, 1, 0.4);
    tree.add_child(b, 0, 0.5);

    Context ctx(0);
    VerifyResult vr = verify(spy, ctx, tree);
    REQUIRE(vr.tau == 2);
    for (const auto& prefix : spy.queried) {
        REQUIRE((prefix.empty() || prefix.front() != 0));   // nothing under token 0
    }
    // exactly: root dist, children of accepted 1, bonus after [1, 0]
    REQUIRE(spy.queried.size() == 3);
}

TEST_CASE("empty tree degrades to one autoregressive step") {
    MapModel target = greedy_target();
    DraftTree tree(0);
    Context ctx(0);
    VerifyResult vr = verify(target, ctx, tree);
    REQUIRE(vr.tau == 0);
    REQUIRE(vr.accepted.empty());
    REQUIRE(vr.bonus == 1);
}

TEST_CASE("no accepted root child still yields the greedy bonus") {
    MapModel target = greedy_target();
    DraftTree tree(4);
    tree.add_child(DraftTree::NO_PARENT, 0, 0.5);
    tree.add_child(DraftTree::NO_PARENT, 3, 0.5);
    Context ctx(0);
    VerifyResult vr = verify(target, ctx, tree);
    REQUIRE(vr.tau == 0);
    REQUIRE(vr.bonus == 1);
}

TEST_CASE("depth ties keep the first accepted path in child order") {
    MapModel target = greedy_target();

    // duplicate token-1 root children; only the first can win a tie
    DraftTree tie(8);
    int r1 = tie.add_child(DraftTree::NO_PARENT, 1, 0.5);
    int r2 = tie.add_child(DraftTree::NO_PARENT, 1, 0.4);
    tie.add_child(r1, 3, 0.5);   // rejected below first
    tie.add_child(r2, 3, 0.5);   // rejected below second
    Context ctx(0);
    VerifyResult vr = verify(target, ctx, tie);
    REQUIRE(vr.tau == 1);
    REQUIRE(vr.best_path == std::vector<int>{r1});

    // a strictly deeper match below the later sibling must win instead
    DraftTree deeper(8);
    int s1 = deeper.add_child(DraftTree::NO_PARENT, 1, 0.5);
    int s2 = deeper.add_child(DraftTree::NO_PARENT, 1, 0.4);
    deeper.add_child(s1, 3, 0.5);                 // rejected
    int s2c = deeper.add_child(s2, 0, 0.5);       // accepted at level 2
    Context ctx2(0);
    VerifyResult vr2 = verify(target, ctx2, deeper);
    REQUIRE(vr2.tau == 2);
    REQUIRE(vr2.best_path == std::vector<int>{s2, s2c});
    REQUIRE(vr2.accepted == std::vector<TokenId>{1, 0});
}

TEST_CASE("verification leaves the context byte-identical") {
    MapModel target = greedy_target();
    Context ctx(3, {2, 2});
    std::uint64_t before = ctx.state_hash();
    DraftTree tree(4);
    tree.add_child(DraftTree::NO_PARENT, 1, 0.5);
    verify(target, ctx, tree);
    REQUIRE(ctx.state_hash() == before);
    REQUIRE(ctx.tokens() == std::vector<TokenId>{2, 2});
}
