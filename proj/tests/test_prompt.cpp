#include <doctest.h>

#include <random>

#include "coldqs/canonical.hpp"
#include "coldqs/errors.hpp"
#include "coldqs/prompt.hpp"
#include "support.hpp"

using namespace coldqs;
using namespace coldqs::prompt;

namespace {

DialogueContext ctx(Intent intent, std::string query) {
    DialogueContext c;
    c.record_id = "r1";
    c.current_query = std::move(query);
    c.intent = intent;
    return c;
}

SuggestionSet good_set() {
    SuggestionSet s;
    s.context_ref = "r1";
    s.candidates = {"Is it waterproof?", "What sizes are there?", "Any discount today?"};
    s.format_ok = true;
    return s;
}

json fixtures() { return json::parse(read_file(testing::source_dir() / "tests/fixtures/parser_cases.json")); }

}  // namespace

TEST_CASE("shipped templates match the golden files byte for byte") {
    const auto dir = testing::source_dir() / "templates";
    CHECK(template_text(TemplateId::general_intent) == read_file(dir / "general_intent.txt"));
    CHECK(template_text(TemplateId::product_recommendation) == read_file(dir / "product_recommendation.txt"));
    CHECK(template_text(TemplateId::judge) == read_file(dir / "judge.txt"));
}

TEST_CASE("template selection by intent") {
    auto p = render_generation_prompt(ctx(Intent::product_recommendation, "Buy something"));
    CHECK(p.template_id == TemplateId::product_recommendation);
    CHECK(p.flattened().find("Buy something") != std::string::npos);
    CHECK(*p.system_text == template_text(TemplateId::product_recommendation));

    for (auto intent : {Intent::unknown, Intent::small_talk, Intent::product_qa, Intent::platform_qa})
        CHECK(render_generation_prompt(ctx(intent, "q")).template_id == TemplateId::general_intent);
}

TEST_CASE("history and profile injected verbatim in turn order") {
    auto c = ctx(Intent::product_qa, "Is it in stock?");
    c.user_profile = "student";
    c.history = {{Speaker::user, "First turn {braces}"}, {Speaker::assistant, "Second turn"}};
    auto p = render_generation_prompt(c);
    const auto& u = p.user_text;
    auto a = u.find("user: First turn {braces}");
    auto b = u.find("assistant: Second turn");
    auto q = u.find("user query: Is it in stock?");
    REQUIRE(a != std::string::npos);
    REQUIRE(b != std::string::npos);
    REQUIRE(q != std::string::npos);
    CHECK(a < b);
    CHECK(b < q);
    CHECK(u.find("student") != std::string::npos);
}

TEST_CASE("judge prompt enumerates candidates and keeps the rule headings") {
    auto p = render_judge_prompt(ctx(Intent::product_qa, "q"), good_set());
    const auto text = p.flattened();
    CHECK(p.template_id == TemplateId::judge);
    for (const auto& c : good_set().candidates) CHECK(text.find(c) != std::string::npos);
    CHECK(text.find("1. Answerability") != std::string::npos);
    CHECK(text.find("Factual Accuracy") != std::string::npos);
    CHECK(text.find("Information Gain") != std::string::npos);
    CHECK(text.find("per_question") != std::string::npos);

    auto bad = good_set();
    bad.format_ok = false;
    CHECK_THROWS_AS(render_judge_prompt(ctx(Intent::product_qa, "q"), bad), PreconditionError);
}

TEST_CASE("judge extension states the candidate count") {
    CHECK(judge_schema_extension(5).find("5 follow-up questions") != std::string::npos);
}

TEST_CASE("parser golden fixtures") {
    const auto cases = fixtures();
    REQUIRE(cases.size() >= 30);
    for (const auto& c : cases) {
        const auto name = c["name"].get<std::string>();
        const auto raw = c["raw"].get<std::string>();
        const int k = c["k"].get<int>();
        const auto& e = c["expect"];
        CAPTURE(name);
        if (c["kind"] == "options") {
            auto s = parse_options(raw, k, "ref");
            CHECK(s.format_ok == e["format_ok"].get<bool>());
            CHECK(s.raw_output == raw);
            if (e.contains("candidates")) CHECK(s.candidates == e["candidates"].get<std::vector<std::string>>());
            if (!s.format_ok) {
                CHECK(s.candidates.empty());
                CHECK_FALSE(s.warnings.empty());
            }
        } else if (e.value("error", false)) {
            CHECK_THROWS_AS(parse_judge_output(raw, k, "ref"), ParseError);
        } else {
            auto v = parse_judge_output(raw, k, "ref");
            CHECK(v.aggregate_score == e["score"].get<int>());
            CHECK(v.degraded == e["degraded"].get<bool>());
            std::vector<std::vector<int>> got;
            for (const auto& t : v.per_candidate) got.push_back({t.answerable, t.factual, t.informative});
            CHECK(got == e["per_candidate"].get<std::vector<std::vector<int>>>());
        }
    }
}

TEST_CASE("long candidate warns without failing") {
    std::string long_opt;
    for (int i = 0; i < 31; ++i) long_opt += "word ";
    auto s = parse_options(serialize_options({long_opt, "b", "c"}), 3);
    CHECK(s.format_ok);
    REQUIRE(s.warnings.size() == 1);
    CHECK(count_tokens(long_opt) == 31);
}

TEST_CASE("parse_options is idempotent and ignores surrounding text") {
    const std::vector<std::string> opts{"a?", "b?", "c?"};
    const auto clean = serialize_options(opts);
    auto once = parse_options(clean, 3);
    auto again = parse_options(serialize_options(once.candidates), 3);
    CHECK(once.candidates == again.candidates);
    for (const char* noise : {"", "ok ", "```json\n", "Answer:\n\n"})
        CHECK(parse_options(std::string(noise) + clean + " thanks", 3).candidates == opts);
}

TEST_CASE("verdict serialize/parse round trip on random verdicts") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 500; ++trial) {
        const int k = 1 + static_cast<int>(bounded_draw(rng, 6));
        JudgeVerdict v;
        v.context_ref = "r";
        v.reason = "trial " + std::to_string(trial);
        for (int i = 0; i < k; ++i) {
            CandidateScores c{static_cast<int>(bounded_draw(rng, 2)), static_cast<int>(bounded_draw(rng, 2)),
                              static_cast<int>(bounded_draw(rng, 2))};
            v.aggregate_score += c.all_pass();
            v.per_candidate.push_back(c);
        }
        const auto text = serialize_judge_output(v);
        auto back = parse_judge_output(text, k, "r");
        back.raw_output.clear();
        CHECK(back == v);
    }
}
