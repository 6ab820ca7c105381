#include <doctest.h>

#include <random>

#include "coldqs/canonical.hpp"
#include "coldqs/errors.hpp"
#include "coldqs/eval.hpp"
#include "coldqs/prompt.hpp"
#include "coldqs/synthetic.hpp"
#include "oracles.hpp"

using namespace coldqs;
using namespace coldqs::eval;

namespace {

JudgeVerdict verdict(const std::string& ref, std::vector<CandidateScores> scores) {
    JudgeVerdict v;
    v.context_ref = ref;
    for (const auto& s : scores) v.aggregate_score += s.all_pass();
    v.per_candidate = std::move(scores);
    return v;
}

}  // namespace

TEST_CASE("strict accuracy and valid rate definitions") {
    std::vector<JudgeVerdict> vs{verdict("a", {{1, 1, 1}, {1, 1, 1}, {1, 1, 1}}),
                                 verdict("b", {{1, 1, 1}, {1, 0, 1}, {1, 1, 1}})};
    CHECK(strict_accuracy(vs) == 0.5);
    CHECK(valid_rate(vs) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));

    std::vector<JudgeVerdict> all_fail{verdict("a", {{0, 1, 1}, {1, 0, 1}, {1, 1, 0}})};
    CHECK(valid_rate(all_fail) == 0.0);
    CHECK(strict_accuracy(all_fail) == 0.0);

    std::vector<JudgeVerdict> none;
    CHECK_THROWS_AS(strict_accuracy(none), PreconditionError);
    CHECK_THROWS_AS(valid_rate(none), PreconditionError);
    CHECK_THROWS_AS(dimension_accuracy(none, Dimension::factual), PreconditionError);
}

TEST_CASE("dimension accuracy") {
    std::vector<JudgeVerdict> vs{verdict("a", {{1, 0, 1}, {1, 0, 1}}), verdict("b", {{1, 0, 1}})};
    CHECK(dimension_accuracy(vs, Dimension::answerable) == 1.0);
    CHECK(dimension_accuracy(vs, Dimension::factual) == 0.0);
    CHECK(dimension_accuracy(vs, Dimension::informative) == 1.0);
    std::vector<JudgeVerdict> single{verdict("a", {{1, 1, 1}})};
    for (auto d : kAllDimensions) CHECK(dimension_accuracy(single, d) == 1.0);
}

TEST_CASE("metrics match the recount oracle; identities hold") {
    std::mt19937_64 rng(21);
    std::vector<JudgeVerdict> vs;
    std::vector<std::vector<oracle::Triple>> raw;
    for (int q = 0; q < 2000; ++q) {
        std::vector<CandidateScores> scores;
        std::vector<oracle::Triple> triples;
        for (int i = 0; i < 3; ++i) {
            oracle::Triple t{bounded_draw(rng, 10) < 8, bounded_draw(rng, 10) < 9, bounded_draw(rng, 10) < 8};
            triples.push_back(t);
            scores.push_back({t[0], t[1], t[2]});
        }
        raw.push_back(triples);
        vs.push_back(verdict("q" + std::to_string(q), scores));
    }
    const auto rc = oracle::recount(raw);
    const auto s = summarize(vs);
    CHECK(s.strict_accuracy == rc.strict());
    CHECK(s.valid_rate == rc.valid());
    CHECK(s.answerable == rc.dim(0));
    CHECK(s.factual == rc.dim(1));
    CHECK(s.informative == rc.dim(2));
    CHECK(s.strict_accuracy <= s.valid_rate);
    CHECK(s.valid_rate <= std::min({s.answerable, s.factual, s.informative}));
    CHECK(s.queries == 2000);
    CHECK(s.candidates == 6000);
}

TEST_CASE("intent breakdown") {
    DatasetPartition ctx;
    ctx.name = PartitionName::test;
    std::vector<JudgeVerdict> vs;
    const Intent intents[] = {Intent::platform_qa, Intent::product_qa, Intent::platform_qa, Intent::unknown};
    for (int i = 0; i < 4; ++i) {
        PartitionRecord r;
        r.context.record_id = "r" + std::to_string(i);
        r.context.current_query = "q";
        r.context.intent = intents[i];
        ctx.records.push_back(r);
        vs.push_back(verdict(r.id(), {{1, 1, 1}, {i % 2, 1, 1}}));
    }
    auto b = intent_breakdown(vs, ctx);
    CHECK(b.size() == 3);
    CHECK(b.count(Intent::small_talk) == 0);
    CHECK(b.at(Intent::platform_qa).queries == 2);
    CHECK(b.at(Intent::platform_qa).strict_accuracy == 0.0);
    CHECK(b.at(Intent::product_qa).strict_accuracy == 1.0);

    double weighted = 0.0;
    std::size_t total = 0;
    for (const auto& [intent, bucket] : b) {
        weighted += bucket.strict_accuracy * static_cast<double>(bucket.queries);
        total += bucket.queries;
    }
    CHECK(weighted / static_cast<double>(total) == doctest::Approx(strict_accuracy(vs)).epsilon(1e-12));

    DatasetPartition one = ctx;
    for (auto& r : one.records) r.context.intent = Intent::platform_qa;
    CHECK(intent_breakdown(vs, one).size() == 1);
}

TEST_CASE("mean and sample std over repeats") {
    auto ms = mean_std(std::vector<double>{0.4, 0.5, 0.6});
    CHECK(ms.mean == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(*ms.std == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(*mean_std(std::vector<double>{0.3, 0.3, 0.3}).std == 0.0);
    CHECK_FALSE(mean_std(std::vector<double>{0.3}).std.has_value());

    int calls = 0;
    auto table = repeated_runs(
        [&](int r) {
            ++calls;
            return RunMetrics{{"strict_accuracy", 0.4 + 0.1 * r}};
        },
        3);
    CHECK(calls == 3);
    CHECK(*table.at("strict_accuracy").std == doctest::Approx(oracle::sample_std({0.4, 0.5, 0.6})).epsilon(1e-12));
    CHECK_THROWS_AS(repeated_runs([](int) { return RunMetrics{}; }, 0), PreconditionError);
    CHECK(render_table(table).find("50.0 ± 10.0") != std::string::npos);
}

TEST_CASE("judge/human agreement") {
    std::vector<bool> judge(500, true), human(500, true);
    for (int i = 0; i < 48; ++i) human[static_cast<std::size_t>(i)] = false;
    std::vector<char> j(judge.begin(), judge.end()), h(human.begin(), human.end());
    auto to_span = [](const std::vector<char>& v) {
        return std::span<const bool>(reinterpret_cast<const bool*>(v.data()), v.size());
    };
    CHECK(judge_human_agreement(to_span(j), to_span(h)) == doctest::Approx(0.904).epsilon(1e-15));
    CHECK(judge_human_agreement(to_span(j), to_span(j)) == 1.0);
    std::vector<char> complement(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) complement[i] = !h[i];
    CHECK(judge_human_agreement(to_span(h), to_span(complement)) == 0.0);
    CHECK_THROWS_AS(judge_human_agreement(to_span(h), to_span(std::vector<char>(3, 1))), PreconditionError);
}

TEST_CASE("judge_outputs: malformed sets, unjudged items, ordering") {
    synthetic::DatasetShape shape;
    shape.click = 0;
    shape.unclick = 0;
    shape.test = 20;
    shape.general = 0;
    auto data = synthetic::make_dataset(shape);
    gateway::Gateway gw(std::make_shared<gateway::MockBackend>());
    gateway::EndpointConfig judge;
    judge.base_url = "http://mock/v1";
    judge.model_name = "eval-judge";

    std::vector<SuggestionSet> outputs;
    for (const auto& r : data.test.records) {
        auto s = prompt::parse_options(prompt::serialize_options({"Which one is lighter?", "Is it on sale?",
                                                                  "Does it come in blue?"}),
                                       3, r.id());
        outputs.push_back(s);
    }
    outputs[4].format_ok = false;
    outputs[4].candidates.clear();
    std::reverse(outputs.begin(), outputs.end());

    auto res = judge_outputs(gw, judge, data.test, outputs, 4);
    CHECK(res.verdicts.size() == 20);
    CHECK(res.unjudged == 0);
    CHECK(std::is_sorted(res.verdicts.begin(), res.verdicts.end(),
                         [](const auto& a, const auto& b) { return a.context_ref < b.context_ref; }));
    const auto& bad = *std::find_if(res.verdicts.begin(), res.verdicts.end(),
                                    [](const auto& v) { return v.context_ref == "t4"; });
    CHECK(bad.per_candidate == std::vector<CandidateScores>(3, CandidateScores{0, 0, 0}));

    gateway::MockOptions faulty;
    faulty.behavior = gateway::MockOptions::Behavior::fault_injection;
    faulty.failure_rate = 0.3;
    gateway::Gateway flaky(std::make_shared<gateway::MockBackend>(faulty), [](auto) {});
    judge.max_retries = 0;
    auto partial = judge_outputs(flaky, judge, data.test, outputs, 4);
    CHECK(partial.unjudged > 0);
    CHECK(partial.verdicts.size() + partial.unjudged == 20);
    CHECK(partial.findings.size() == partial.unjudged);
}
