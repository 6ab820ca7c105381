#include <doctest.h>

#include <algorithm>
#include <random>

#include "coldqs/canonical.hpp"
#include "coldqs/errors.hpp"
#include "coldqs/reward.hpp"
#include "oracles.hpp"

using namespace coldqs;
using namespace coldqs::reward;

namespace {

SuggestionSet set(bool ok, int k = 3) {
    SuggestionSet s;
    s.context_ref = "r";
    s.k = k;
    s.format_ok = ok;
    if (ok)
        for (int i = 0; i < k; ++i) s.candidates.push_back("c" + std::to_string(i));
    return s;
}

JudgeVerdict verdict(std::vector<CandidateScores> scores) {
    JudgeVerdict v;
    v.context_ref = "r";
    for (const auto& s : scores) v.aggregate_score += s.all_pass();
    v.per_candidate = std::move(scores);
    return v;
}

}  // namespace

TEST_CASE("format reward") {
    CHECK(format_reward(set(true)) == 1);
    CHECK(format_reward(set(false)) == 0);
    SuggestionSet empty;
    CHECK(format_reward(empty) == 0);
}

TEST_CASE("per-candidate reward is the dimension product") {
    auto v = verdict({{1, 1, 1}, {1, 0, 1}, {0, 0, 0}});
    CHECK(per_candidate_reward(v, 0) == 1.0);
    CHECK(per_candidate_reward(v, 1) == 0.0);
    CHECK(per_candidate_reward(v, 2) == 0.0);
    CHECK_THROWS_AS(per_candidate_reward(v, 3), PreconditionError);
}

TEST_CASE("rollout reward examples and errors") {
    const std::vector<double> ones{1, 1, 1}, one_of_three{1, 0, 0};
    CHECK(rollout_reward(1, ones) == 1.0);
    CHECK(rollout_reward(0, ones) == 0.0);
    CHECK(rollout_reward(1, one_of_three) == 1.0 / 3.0);
    CHECK_THROWS_AS(rollout_reward(1, std::vector<double>{}), PreconditionError);
    CHECK_THROWS_AS(rollout_reward(2, ones), PreconditionError);
    CHECK_THROWS_AS(rollout_reward(1, std::vector<double>{1.5}), PreconditionError);
}

TEST_CASE("rollout reward matches the oracle; invariants hold") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 300; ++trial) {
        const int k = 1 + static_cast<int>(bounded_draw(rng, 10));
        const int rf = static_cast<int>(bounded_draw(rng, 2));
        std::vector<oracle::Triple> triples;
        std::vector<CandidateScores> scores;
        for (int i = 0; i < k; ++i) {
            oracle::Triple t{static_cast<int>(bounded_draw(rng, 2)), static_cast<int>(bounded_draw(rng, 2)),
                             static_cast<int>(bounded_draw(rng, 2))};
            triples.push_back(t);
            scores.push_back({t[0], t[1], t[2]});
        }
        auto products = per_candidate_rewards(verdict(scores));
        const double r = rollout_reward(rf, products);
        CHECK(r == doctest::Approx(oracle::rollout_reward(rf, triples)).epsilon(1e-12));
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);

        auto shuffled = products;
        deterministic_shuffle(shuffled, static_cast<std::uint64_t>(trial));
        CHECK(rollout_reward(rf, shuffled) == doctest::Approx(r).epsilon(1e-12));

        // Flip one failing dimension to pass: never decreases.
        auto flipped = scores;
        for (auto& s : flipped) {
            if (s.factual == 0) {
                s.factual = 1;
                break;
            }
        }
        CHECK(rollout_reward(rf, per_candidate_rewards(verdict(flipped))) >= r);
    }
}

TEST_CASE("group advantages") {
    for (double a : group_advantages(std::vector<double>{1, 1, 1, 1})) CHECK(a == 0.0);

    auto two = group_advantages(std::vector<double>{0, 1});
    CHECK(two[0] == doctest::Approx(-0.999998000004).epsilon(1e-12));
    CHECK(two[1] == doctest::Approx(0.999998000004).epsilon(1e-12));

    const std::vector<double> three{0.2, 0.4, 0.6};
    auto got = group_advantages(three);
    auto want = oracle::advantages(three, 1e-6);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(got[i] - want[i]) < 1e-12);

    CHECK_THROWS_AS(group_advantages(std::vector<double>{1}), PreconditionError);
}

TEST_CASE("advantage properties on random groups") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + bounded_draw(rng, 15);
        std::vector<double> rs(n);
        for (auto& r : rs) r = u(rng);
        auto a = group_advantages(rs);
        double sum = 0.0, mean = 0.0;
        for (double v : a) sum += v;
        for (double r : rs) mean += r;
        mean /= static_cast<double>(n);
        CHECK(std::abs(sum) < 1e-9);
        for (std::size_t i = 0; i < n; ++i) {
            if (rs[i] > mean) CHECK(a[i] > 0.0);
            if (rs[i] < mean) CHECK(a[i] < 0.0);
        }
        auto scaled = rs;
        for (auto& r : scaled) r *= 0.37;
        auto b = group_advantages(scaled);
        CHECK(std::max_element(a.begin(), a.end()) - a.begin() == std::max_element(b.begin(), b.end()) - b.begin());
    }
}

TEST_CASE("score_rollout_group") {
    auto perfect = verdict({{1, 1, 1}, {1, 1, 1}, {1, 1, 1}});
    auto g = score_rollout_group("r", {set(true), set(false)}, {perfect, std::nullopt});
    REQUIRE(g.n() == 2);
    CHECK(g.rollouts[0].reward.rollout_reward == 1.0);
    CHECK(g.rollouts[1].reward.rollout_reward == 0.0);
    CHECK(*g.rollouts[0].advantage == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(*g.rollouts[1].advantage == doctest::Approx(-1.0).epsilon(1e-5));
    CHECK(g.rollouts[1].reward.per_candidate_products == std::vector<double>{0, 0, 0});

    auto bad = score_rollout_group("r", {set(false), set(false), set(false)}, {std::nullopt, std::nullopt, std::nullopt});
    for (const auto& s : bad.rollouts) {
        CHECK(s.reward.rollout_reward == 0.0);
        CHECK(*s.advantage == 0.0);
    }

    CHECK_THROWS_AS(score_rollout_group("r", {set(true)}, {perfect}), PreconditionError);
    CHECK_THROWS_AS(score_rollout_group("r", {set(true), set(true)}, {perfect}), PreconditionError);
    CHECK_THROWS_AS(score_rollout_group("r", {set(true), set(true)}, {perfect, std::nullopt}), PreconditionError);

    auto degraded = perfect;
    degraded.degraded = true;
    auto flagged = score_rollout_group("r", {set(true), set(true)}, {perfect, degraded});
    CHECK_FALSE(flagged.rollouts[0].degraded);
    CHECK(flagged.rollouts[1].degraded);
}
