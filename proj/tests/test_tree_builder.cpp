#include <catch2/catch_amalgamated.hpp>

#include "map_model.hpp"
#include "sage/tree_builder.hpp"

using namespace sage;
using sage::testing::MapModel;

namespace {

// Every distribution here sums to exactly 1.0 in doubles, so normalization
// keeps the literals and the 0.1-vs-threshold tie below stays an exact tie.
MapModel two_level_model() {
    return MapModel(4, {
        {{}, {0.6, 0.3, 0.08, 0.02}},
        {{0}, {0.9, 0.1, 0.0, 0.0}},
        {{1}, {0.25, 0.25, 0.25, 0.25}},
        {{2}, {0.05, 0.05, 0.05, 0.85}},
    });
}

} // namespace

TEST_CASE("builder includes candidates by width, threshold, and forced rank 0") {
    MapModel m = two_level_model();
    Context ctx(0);
    DraftTree t = build_tree(m, ctx, {2, 3}, 64);

    // level 1: width 3, threshold 0.05, all of 0.6 / 0.3 / 0.08 enter and
    //   rank 3 (0.02) is cut by width
    // level 2 under token 0: width 2, threshold 0.1; 0.9 survives while the
    //   0.1 at rank 1 equals the bar exactly and the strict comparison drops it
    // level 2 under token 1: width 1, the uniform 0.25 tie keeps lowest id
    // level 2 under token 2: width 1, 0.85 enters
    REQUIRE(t.size() == 6);
    REQUIRE(t.node(0).token == 0);
    REQUIRE(t.node(0).level == 1);
    REQUIRE(t.node(1).token == 0);
    REQUIRE(t.node(1).parent == 0);
    REQUIRE(t.node(1).level == 2);
    REQUIRE(t.node(1).node_prob == Catch::Approx(0.9));
    REQUIRE(t.node(2).token == 1);
    REQUIRE(t.node(2).parent == DraftTree::NO_PARENT);
    REQUIRE(t.node(3).token == 0);
    REQUIRE(t.node(3).parent == 2);
    REQUIRE(t.node(3).node_prob == Catch::Approx(0.25));
    REQUIRE(t.node(4).token == 2);
    REQUIRE(t.node(5).token == 3);
    REQUIRE(t.node(5).parent == 4);
    REQUIRE(t.node(5).path_prob == Catch::Approx(0.08 * 0.85).epsilon(1e-12));

    // the walk must leave the context untouched
    REQUIRE(ctx.size() == 0);
}

TEST_CASE("rank 0 is kept even below threshold, later ranks are not") {
    MapModel flat(20, {});   // uniform 0.05 everywhere, threshold at depth 1 is 0.1
    Context ctx(0);
    DraftTree t = build_tree(flat, ctx, {1, 3}, 64);
    REQUIRE(t.size() == 1);
    REQUIRE(t.node(0).node_prob == Catch::Approx(0.05));
}

TEST_CASE("node budget truncates in depth-first order") {
    MapModel m = two_level_model();
    Context ctx(0);
    DraftTree t = build_tree(m, ctx, {2, 3}, 3);
    REQUIRE(t.size() == 3);
    REQUIRE(t.node(0).token == 0);   // first root child
    REQUIRE(t.node(1).parent == 0);  // its best child
    REQUIRE(t.node(2).token == 1);   // second root child, subtree cut off

    auto res = validate_tree_against_rule(t, m, ctx, {2, 3}, 3);
    REQUIRE(res.ok);
    REQUIRE(res.truncated);
}

TEST_CASE("validator accepts built trees and flags tampered ones") {
    MapModel m = two_level_model();
    Context ctx(0);
    DraftTree t = build_tree(m, ctx, {2, 3}, 64);
    auto res = validate_tree_against_rule(t, m, ctx, {2, 3}, 64);
    REQUIRE(res.ok);
    REQUIRE_FALSE(res.truncated);

    SECTION("altered probability") {
        DraftTree bad(64);
        for (int i = 0; i < t.size(); ++i) {
            const auto& n = t.node(i);
            bad.add_child(n.parent, n.token, i == 3 ? 0.26 : n.node_prob);
        }
        REQUIRE_FALSE(validate_tree_against_rule(bad, m, ctx, {2, 3}, 64).ok);
    }
    SECTION("missing final node") {
        DraftTree bad(64);
        for (int i = 0; i + 1 < t.size(); ++i) {
            const auto& n = t.node(i);
            bad.add_child(n.parent, n.token, n.node_prob);
        }
        REQUIRE_FALSE(validate_tree_against_rule(bad, m, ctx, {2, 3}, 64).ok);
    }
    SECTION("extra node") {
        DraftTree bad(64);
        for (int i = 0; i < t.size(); ++i) {
            const auto& n = t.node(i);
            bad.add_child(n.parent, n.token, n.node_prob);
        }
        bad.add_child(0, 3, 0.1);
        REQUIRE_FALSE(validate_tree_against_rule(bad, m, ctx, {2, 3}, 64).ok);
    }
    SECTION("sibling order swapped") {
        DraftTree bad(64);
        bad.add_child(DraftTree::NO_PARENT, t.node(2).token, t.node(2).node_prob);
        bad.add_child(DraftTree::NO_PARENT, t.node(0).token, t.node(0).node_prob);
        REQUIRE_FALSE(validate_tree_against_rule(bad, m, ctx, {2, 3}, 64).ok);
    }
    SECTION("wrong shape parameters fail closed") {
        REQUIRE_FALSE(validate_tree_against_rule(t, m, ctx, {1, 3}, 64).ok);
        REQUIRE_THROWS_AS(validate_tree_against_rule(t, m, ctx, {0, 3}, 64), ConfigError);
    }
}

TEST_CASE("path threshold mode prunes by cumulative probability") {
    MapModel m(4, {
        {{}, {0.35, 0.33, 0.3, 0.02}},
        {{0}, {0.7, 0.2, 0.06, 0.04}},
        {{1}, {0.8, 0.1, 0.06, 0.04}},
        {{2}, {0.6, 0.3, 0.06, 0.04}},
    });
    Context ctx(0);
    DraftTree node_tree = build_tree(m, ctx, {2, 4}, 64, ThresholdMode::node);
    DraftTree path_tree = build_tree(m, ctx, {2, 4}, 64, ThresholdMode::path);
    REQUIRE(node_tree.size() == 8);
    REQUIRE(path_tree.size() == 6);   // 0.35*0.2, 0.3*0.3 fall below the level-2 bar

    REQUIRE(validate_tree_against_rule(path_tree, m, ctx, {2, 4}, 64, ThresholdMode::path).ok);
    REQUIRE_FALSE(validate_tree_against_rule(node_tree, m, ctx, {2, 4}, 64, ThresholdMode::path).ok);
    REQUIRE_FALSE(validate_tree_against_rule(path_tree, m, ctx, {2, 4}, 64, ThresholdMode::node).ok);
}

TEST_CASE("template fill follows slot order and ranks") {
    MapModel m(4, {
        {{}, {0.6, 0.3, 0.08, 0.02}},
        {{0}, {0.1, 0.7, 0.1, 0.1}},
        {{1}, {0.25, 0.25, 0.25, 0.25}},
        {{0, 1}, {0.4, 0.3, 0.2, 0.1}},
    });
    TreeTemplate tmpl;
    tmpl.slots = {{-1, 0}, {-1, 1}, {0, 0}, {1, 0}, {2, 0}};
    Context ctx(0);
    DraftTree t = fill_template(m, ctx, tmpl);

    REQUIRE(t.size() == 5);
    REQUIRE(t.node(0).token == 0);                     // root rank 0
    REQUIRE(t.node(1).token == 1);                     // best after [0]
    REQUIRE(t.node(1).parent == 0);
    REQUIRE(t.node(2).token == 0);                     // best after [0, 1]
    REQUIRE(t.node(2).level == 3);
    REQUIRE(t.node(2).node_prob == Catch::Approx(0.4));
    REQUIRE(t.node(3).token == 1);                     // root rank 1
    REQUIRE(t.node(3).parent == DraftTree::NO_PARENT);
    REQUIRE(t.node(4).parent == 3);
    REQUIRE(t.node(4).node_prob == Catch::Approx(0.25));
    REQUIRE(ctx.size() == 0);

    DraftTree pruned = fill_template(m, ctx, tmpl, 2);
    REQUIRE(pruned.size() == 4);
    REQUIRE(pruned.max_level() == 2);
}

TEST_CASE("template slots beyond the vocabulary are skipped with their subtrees") {
    MapModel m(2, {{{}, {0.7, 0.3}}});
    TreeTemplate tmpl;
    tmpl.slots = {{-1, 0}, {-1, 1}, {-1, 2}, {2, 0}};
    Context ctx(0);
    DraftTree t = fill_template(m, ctx, tmpl);
    REQUIRE(t.size() == 2);
    REQUIRE(t.max_level() == 1);
}

TEST_CASE("default template fills to its full shape on a rich vocabulary") {
    SeededTargetModel m(50, 77);
    Context ctx(0, {1, 2});
    DraftTree t = fill_template(m, ctx, default_initial_template());
    REQUIRE(t.size() == 18);
    REQUIRE(t.max_level() == 6);
    REQUIRE(static_cast<int>(t.root_children().size()) == 4);
    REQUIRE(ctx.size() == 2);

    // siblings under one parent carry distinct tokens in rank order
    const auto& roots = t.root_children();
    for (std::size_t i = 1; i < roots.size(); ++i) {
        REQUIRE(t.node(roots[i]).node_prob <= t.node(roots[i - 1]).node_prob);
        REQUIRE(t.node(roots[i]).token != t.node(roots[i - 1]).token);
    }
}

TEST_CASE("builder rejects degenerate shapes") {
    MapModel m = two_level_model();
    Context ctx(0);
    REQUIRE_THROWS_AS(build_tree(m, ctx, {0, 3}, 64), ConfigError);
    REQUIRE_THROWS_AS(build_tree(m, ctx, {2, 0}, 64), ConfigError);
    DraftTree empty = build_tree(m, ctx, {2, 3}, 0);
    REQUIRE(empty.empty());
}
