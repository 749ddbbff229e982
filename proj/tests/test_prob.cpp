#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sage/prob.hpp"

using namespace sage;

TEST_CASE("ProbVector normalizes weights") {
    ProbVector p(std::vector<double>{2.0, 3.0, 5.0});
    REQUIRE(p.size() == 3);
    REQUIRE(p[0] == Catch::Approx(0.2));
    REQUIRE(p[1] == Catch::Approx(0.3));
    REQUIRE(p[2] == Catch::Approx(0.5));
    REQUIRE(p.sum() == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ProbVector rejects bad input") {
    REQUIRE_THROWS_AS(ProbVector(std::vector<double>{}), std::invalid_argument);
    REQUIRE_THROWS_AS(ProbVector(std::vector<double>{0.5, -0.1}), std::invalid_argument);
    REQUIRE_THROWS_AS(ProbVector(std::vector<double>{0.0, 0.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(ProbVector(std::vector<double>{1.0, std::nan("")}), std::invalid_argument);
    double inf = std::numeric_limits<double>::infinity();
    REQUIRE_THROWS_AS(ProbVector(std::vector<double>{1.0, inf}), std::invalid_argument);
}

TEST_CASE("entropy of known distributions") {
    ProbVector skew(std::vector<double>{0.8, 0.2});
    REQUIRE(shannon_entropy(skew) == Catch::Approx(0.5004024235381879).epsilon(1e-12));

    ProbVector uniform(std::vector<double>{1, 1, 1, 1, 1});
    REQUIRE(shannon_entropy(uniform) == Catch::Approx(std::log(5.0)).epsilon(1e-12));

    ProbVector onehot(std::vector<double>{0.0, 1.0, 0.0});
    REQUIRE(shannon_entropy(onehot) == 0.0);
}

TEST_CASE("total variation distance") {
    ProbVector p(std::vector<double>{0.8, 0.2});
    ProbVector q(std::vector<double>{0.7, 0.3});
    REQUIRE(tv_distance(p, q) == Catch::Approx(0.1).epsilon(1e-12));
    REQUIRE(tv_distance(p, p) == 0.0);
    ProbVector r(std::vector<double>{1, 1, 1});
    REQUIRE_THROWS_AS(tv_distance(p, r), std::invalid_argument);
}

TEST_CASE("argmax breaks ties toward the lowest id") {
    REQUIRE(argmax(ProbVector(std::vector<double>{0.4, 0.4, 0.2})) == 0);
    REQUIRE(argmax(ProbVector(std::vector<double>{0.2, 0.4, 0.4})) == 1);
    REQUIRE(argmax(ProbVector(std::vector<double>{0.1, 0.2, 0.7})) == 2);
}

TEST_CASE("top_ranked orders by probability then id") {
    ProbVector p(std::vector<double>{0.1, 0.5, 0.2, 0.2});
    auto top = top_ranked(p, 3);
    REQUIRE(top.size() == 3);
    REQUIRE(top[0].id == 1);
    REQUIRE(top[0].prob == Catch::Approx(0.5));
    REQUIRE(top[1].id == 2);
    REQUIRE(top[2].id == 3);

    REQUIRE_THROWS_AS(top_ranked(p, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(top_ranked(p, 5), std::invalid_argument);
}
