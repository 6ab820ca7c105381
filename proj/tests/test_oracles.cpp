// Frozen outputs of the reference oracles. If one of these moves, the oracle
// changed, not the library.

#include <doctest.h>

#include "oracles.hpp"

TEST_CASE("rollout reward oracle: fixed points") {
    CHECK(oracle::rollout_reward(1, {{1, 1, 1}, {1, 1, 1}, {1, 1, 1}}) == 1.0);
    CHECK(oracle::rollout_reward(0, {{1, 1, 1}, {1, 1, 1}, {1, 1, 1}}) == 0.0);
    CHECK(oracle::rollout_reward(1, {{1, 1, 1}, {0, 1, 1}, {1, 0, 0}}) == 1.0 / 3.0);
    CHECK(oracle::rollout_reward(1, {{1, 1, 1}, {1, 0, 1}, {1, 1, 1}}) == 2.0 / 3.0);
}

TEST_CASE("variance oracle: fixed points") {
    CHECK(oracle::population_variance({1, 1, 1}) == 0.0);
    CHECK(oracle::population_variance({1, 0, 1}) == doctest::Approx(2.0 / 9.0).epsilon(1e-15));
    CHECK(oracle::population_variance({1, 0, 0}) == doctest::Approx(2.0 / 9.0).epsilon(1e-15));
    CHECK(oracle::population_variance({0, 1}) == 0.25);
}

TEST_CASE("advantage oracle: fixed points") {
    auto a = oracle::advantages({0, 1}, 1e-6);
    CHECK(a[0] == doctest::Approx(-0.999998000004).epsilon(1e-13));
    CHECK(a[1] == doctest::Approx(0.999998000004).epsilon(1e-13));

    auto b = oracle::advantages({0.2, 0.4, 0.6}, 1e-6);
    CHECK(b[0] == doctest::Approx(-1.2247373714375167).epsilon(1e-13));
    CHECK(std::abs(b[1]) < 1e-12);
    CHECK(b[2] == doctest::Approx(1.2247373714375167).epsilon(1e-13));

    for (double v : oracle::advantages({1, 1, 1, 1}, 1e-6)) CHECK(v == 0.0);
}

TEST_CASE("sample std oracle") {
    CHECK(oracle::sample_std({0.4, 0.5, 0.6}) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(oracle::sample_std({0.7, 0.7, 0.7}) == 0.0);
}

TEST_CASE("recount oracle") {
    auto r = oracle::recount({{{1, 1, 1}, {1, 1, 1}, {1, 1, 1}}, {{1, 1, 1}, {1, 0, 1}, {1, 1, 1}}});
    CHECK(r.strict() == 0.5);
    CHECK(r.valid() == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
    CHECK(r.dim(0) == 1.0);
    CHECK(r.dim(1) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
}
