#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

#include "coldqs/canonical.hpp"
#include "coldqs/errors.hpp"
#include "coldqs/partition.hpp"
#include "coldqs/types.hpp"
#include "support.hpp"

using namespace coldqs;

namespace {

PartitionRecord click_record(const std::string& id) {
    PartitionRecord r;
    r.context.record_id = id;
    r.context.current_query = "Can you recommend a good backpack?";
    r.context.intent = Intent::product_recommendation;
    r.context.click_label = ClickLabel::clicked;
    r.context.history = {{Speaker::user, "hi"}, {Speaker::assistant, "hello"}};
    SuggestionSet s;
    s.context_ref = id;
    s.candidates = {"a?", "b?", "c?"};
    s.format_ok = true;
    r.suggestions = s;
    return r;
}

DatasetPartition click_partition(std::initializer_list<const char*> ids) {
    DatasetPartition p;
    p.name = PartitionName::click;
    for (const char* id : ids) p.records.push_back(click_record(id));
    return p;
}

std::size_t errors_in(const std::vector<Finding>& fs) {
    return static_cast<std::size_t>(
        std::count_if(fs.begin(), fs.end(), [](const Finding& f) { return f.severity == Severity::error; }));
}

}  // namespace

TEST_CASE("sha256 known answer") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("canonical dump sorts keys and is whitespace-free") {
    auto a = json::parse(R"({"b": 1, "a": [1, 2.5, "x"], "c": {"z": null, "y": true}})");
    auto b = json::parse("{\"c\":{\"y\":true,\"z\":null},\"a\":[1,2.5,\"x\"],\"b\":1}");
    CHECK(canonical_dump(a) == R"({"a":[1,2.5,"x"],"b":1,"c":{"y":true,"z":null}})");
    CHECK(canonical_dump(a) == canonical_dump(b));
    CHECK(canonical_dump(json(0.1)) == "0.1");
    CHECK(canonical_dump(json(1.0 / 3.0)) == "0.3333333333333333");
}

TEST_CASE("derive_seed is stable and label sensitive") {
    CHECK(derive_seed(42, "x") == derive_seed(42, "x"));
    CHECK(derive_seed(42, "x") != derive_seed(42, "y"));
    CHECK(derive_seed(42, "x") != derive_seed(43, "x"));
}

TEST_CASE("deterministic shuffle is a permutation and reproducible") {
    std::vector<int> a(50), b;
    for (int i = 0; i < 50; ++i) a[static_cast<std::size_t>(i)] = i;
    b = a;
    deterministic_shuffle(a, 9);
    deterministic_shuffle(b, 9);
    CHECK(a == b);
    std::set<int> seen(a.begin(), a.end());
    CHECK(seen.size() == 50);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 1000; ++i) CHECK(bounded_draw(rng, 7) < 7);
}

TEST_CASE("every domain type round-trips through JSON") {
    auto r = click_record("r1");
    r.context.clicked_index = 2;
    r.context.user_profile = "student";
    JudgeVerdict v;
    v.context_ref = "r1";
    v.per_candidate = {{1, 1, 1}, {1, 0, 1}, {1, 1, 1}};
    v.aggregate_score = 2;
    v.reason = "second one is wrong";
    r.verdict = v;
    UncertaintyRecord u;
    u.context_ref = "r1";
    u.per_candidate_rewards = {1, 0, 1};
    u.u = 2.0 / 9.0;
    r.uncertainty = u;

    const auto j = json(r);
    CHECK(j.get<PartitionRecord>() == r);
    CHECK(json::parse(canonical_dump(j)).get<PartitionRecord>() == r);

    ScoredRollout s;
    s.suggestion_set = *r.suggestions;
    s.reward = {1, {1.0, 0.0, 1.0}, 2.0 / 3.0};
    s.advantage = -0.5;
    RolloutGroup g{"r1", {s, s}};
    CHECK(json(g).get<RolloutGroup>() == g);
    Finding f{Severity::warning, "r1", "odd"};
    CHECK(json(f).get<Finding>() == f);
}

TEST_CASE("absent intent and click label take their defaults") {
    auto j = json::parse(R"({"record_id":"x","user_profile":"","history":[],"current_query":"q"})");
    auto c = j.get<DialogueContext>();
    CHECK(c.intent == Intent::unknown);
    CHECK(c.click_label == ClickLabel::unlabeled);
    CHECK_FALSE(c.clicked_index.has_value());
}

TEST_CASE("unknown enum names are rejected") {
    auto j = json::parse(R"({"record_id":"x","history":[],"current_query":"q","intent":"chitchat"})");
    CHECK_THROWS_AS(j.get<DialogueContext>(), ValidationError);
}

TEST_CASE("validate_partition examples") {
    CHECK(validate_partition(click_partition({"r1", "r2", "r3"})).empty());

    auto dup = click_partition({"r1", "r1"});
    CHECK(errors_in(validate_partition(dup)) == 1);

    auto wrong = click_partition({"r1"});
    wrong.records[0].context.click_label = ClickLabel::unclicked;
    CHECK(errors_in(validate_partition(wrong)) == 1);

    auto empty_query = click_partition({"r1"});
    empty_query.records[0].context.current_query = "";
    CHECK(errors_in(validate_partition(empty_query)) == 1);

    auto odd_history = click_partition({"r1"});
    odd_history.records[0].context.history = {{Speaker::user, "a"}, {Speaker::user, "b"}};
    auto fs = validate_partition(odd_history);
    REQUIRE(fs.size() == 1);
    CHECK(fs[0].severity == Severity::warning);
    CHECK_FALSE(has_errors(fs));
}

TEST_CASE("unclick partition rejects clicked records") {
    DatasetPartition p;
    p.name = PartitionName::unclick;
    PartitionRecord r;
    r.context.record_id = "u1";
    r.context.current_query = "q";
    r.context.click_label = ClickLabel::unclicked;
    p.records.push_back(r);
    CHECK(validate_partition(p).empty());
    p.records[0].context.click_label = ClickLabel::clicked;
    CHECK(has_errors(validate_partition(p)));
}

TEST_CASE("verdict validation catches inconsistent aggregates") {
    JudgeVerdict v;
    v.per_candidate = {{1, 1, 1}, {1, 0, 1}, {1, 1, 1}};
    v.aggregate_score = 2;
    CHECK(validate_verdict(v).empty());
    v.aggregate_score = 3;
    CHECK(has_errors(validate_verdict(v)));
    v.aggregate_score = 2;
    v.per_candidate[0].answerable = 2;
    CHECK(has_errors(validate_verdict(v)));
}

TEST_CASE("content digest: stable under re-serialization, sensitive to order") {
    testing::TempDir dir;
    auto p = click_partition({"r1", "r2", "r3"});
    const auto d = p.content_digest();
    save_partition(dir / "p.jsonl", p);
    auto back = load_partition(dir / "p.jsonl", PartitionName::click);
    CHECK(back == p);
    CHECK(back.content_digest() == d);

    // Reformatted with whitespace and shuffled keys: same digest.
    {
        std::ofstream out(dir / "pretty.jsonl");
        out << R"({"schema_version": 1})" << "\n\n";
        for (const auto& r : p.records) {
            auto j = json(r);
            out << j.dump() << "\n";
        }
    }
    CHECK(load_partition(dir / "pretty.jsonl", PartitionName::click).content_digest() == d);

    std::swap(p.records[0], p.records[1]);
    CHECK(p.content_digest() != d);

    auto h = click_partition({"r1"});
    auto h2 = h;
    std::swap(h2.records[0].context.history[0], h2.records[0].context.history[1]);
    CHECK(h.content_digest() != h2.content_digest());
}

TEST_CASE("jsonl loader reports bad lines") {
    testing::TempDir dir;
    {
        std::ofstream out(dir / "bad.jsonl");
        out << "{\"record_id\":\"a\"\n";
    }
    CHECK_THROWS_AS(load_partition(dir / "bad.jsonl", PartitionName::click), ValidationError);
    CHECK_THROWS_AS(load_partition(dir / "missing.jsonl", PartitionName::click), ValidationError);
}
