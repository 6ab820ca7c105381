#include "coldqs/prompt.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <sstream>

#include "coldqs/errors.hpp"
#include "templates.hpp"

namespace coldqs::prompt {

namespace {

constexpr std::string_view kWhitespace = " \t\r\n\f\v";

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(kWhitespace);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(kWhitespace);
    return std::string(s.substr(b, e - b + 1));
}

// Removes ``` fence markers together with any language tag glued to them.
std::string strip_code_fences(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    std::size_t pos = 0;
    while (pos < raw.size()) {
        auto fence = raw.find("```", pos);
        if (fence == std::string_view::npos) {
            out.append(raw.substr(pos));
            break;
        }
        out.append(raw.substr(pos, fence - pos));
        pos = fence + 3;
        while (pos < raw.size() && std::isalnum(static_cast<unsigned char>(raw[pos]))) ++pos;
        out.push_back('\n');
    }
    return out;
}

// End index (exclusive) of the balanced object starting at `start`, honoring
// string literals and escapes.
std::optional<std::size_t> balanced_end(std::string_view s, std::size_t start) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < s.size(); ++i) {
        char c = s[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}') {
            if (--depth == 0) return i + 1;
        }
    }
    return std::nullopt;
}

std::optional<int> as_binary(const json& v) {
    if (v.is_boolean()) return v.get<bool>() ? 1 : 0;
    if (v.is_number_integer() || v.is_number_unsigned()) {
        auto x = v.get<long long>();
        if (x == 0 || x == 1) return static_cast<int>(x);
    }
    if (v.is_number_float()) {
        double x = v.get<double>();
        if (x == 0.0 || x == 1.0) return static_cast<int>(x);
    }
    return std::nullopt;
}

std::optional<int> as_count(const json& v, int k) {
    long long x;
    if (v.is_number_integer() || v.is_number_unsigned()) x = v.get<long long>();
    else if (v.is_number_float() && v.get<double>() == static_cast<long long>(v.get<double>()))
        x = static_cast<long long>(v.get<double>());
    else return std::nullopt;
    if (x < 0 || x > k) return std::nullopt;
    return static_cast<int>(x);
}

constexpr const char* kDimensionKeys[] = {"Answerability", "Factual_Accuracy", "Information_Gain"};

void set_dim(CandidateScores& c, int dim, int value) {
    switch (dim) {
        case 0: c.answerable = value; break;
        case 1: c.factual = value; break;
        default: c.informative = value; break;
    }
}

int failing_count(const std::vector<CandidateScores>& per_candidate) {
    return static_cast<int>(std::count_if(per_candidate.begin(), per_candidate.end(),
                                          [](const CandidateScores& c) { return !c.all_pass(); }));
}

// Aggregate-only schema. The last (k - score) candidates are the failing ones;
// each dimension's failures are dealt onto them from the back, cycling so every
// failing candidate receives at least one zero.
std::vector<CandidateScores> reconstruct_from_counts(int k, int score,
                                                      const std::array<int, 3>& counts) {
    std::vector<CandidateScores> out(static_cast<std::size_t>(k), CandidateScores{1, 1, 1});
    const int failing = k - score;
    if (failing == 0) {
        for (int c : counts)
            if (c != k) throw ParseError("dimension counts contradict a full score");
        return out;
    }
    int cursor = 0;
    int dealt = 0;
    for (int d = 0; d < 3; ++d) {
        const int fails = k - counts[static_cast<std::size_t>(d)];
        if (fails > failing)
            throw ParseError("dimension " + std::string(kDimensionKeys[d]) +
                             " fails more candidates than the score allows");
        for (int f = 0; f < fails; ++f) {
            const int idx = k - 1 - (cursor % failing);
            set_dim(out[static_cast<std::size_t>(idx)], d, 0);
            ++cursor;
            ++dealt;
        }
    }
    if (dealt < failing) throw ParseError("dimension counts fail fewer candidates than the score");
    return out;
}

}  // namespace

std::string_view to_string(TemplateId id) {
    switch (id) {
        case TemplateId::general_intent: return "general_intent";
        case TemplateId::product_recommendation: return "product_recommendation";
        case TemplateId::judge: return "judge";
    }
    return "?";
}

std::string PromptText::flattened() const {
    if (!system_text) return user_text;
    return *system_text + "\n" + user_text;
}

std::string_view template_text(TemplateId id) {
    switch (id) {
        case TemplateId::general_intent: return detail::kGeneralIntent;
        case TemplateId::product_recommendation: return detail::kProductRecommendation;
        case TemplateId::judge: return detail::kJudge;
    }
    return {};
}

std::string judge_schema_extension(int k) {
    std::ostringstream os;
    os << "\nThere are " << k << " follow-up questions to evaluate.\n"
       << "In the same JSON object, also include a \"per_question\" array with exactly " << k
       << " entries, one per follow-up question in the order given. Each entry has the form "
          "{\"Answerability\":1,\"Factual_Accuracy\":1,\"Information_Gain\":1}, where 1 means "
          "the question complies with that rule and 0 means it violates it. "
          "\"Answerability\", \"Factual_Accuracy\" and \"Information_Gain\" at the top level "
          "count the questions that comply with each rule.\n";
    return os.str();
}

PromptText render_generation_prompt(const DialogueContext& ctx) {
    PromptText p;
    p.template_id = ctx.intent == Intent::product_recommendation
                        ? TemplateId::product_recommendation
                        : TemplateId::general_intent;
    p.system_text = std::string(template_text(p.template_id));

    std::string user;
    if (!ctx.user_profile.empty()) user += "user profile: " + ctx.user_profile + "\n";
    if (!ctx.history.empty()) {
        user += "conversation history:\n";
        for (const auto& turn : ctx.history) {
            user += std::string(to_string(turn.speaker)) + ": " + turn.utterance + "\n";
        }
    }
    user += "user query: " + ctx.current_query + "\n";
    p.user_text = std::move(user);
    return p;
}

PromptText render_judge_prompt(const DialogueContext& ctx, const SuggestionSet& suggestions) {
    if (!suggestions.format_ok)
        throw PreconditionError("cannot judge a malformed suggestion set for '" + ctx.record_id +
                                "'");
    PromptText p;
    p.template_id = TemplateId::judge;
    p.system_text = std::string(template_text(TemplateId::judge)) +
                    judge_schema_extension(static_cast<int>(suggestions.candidates.size()));

    std::string user;
    if (!ctx.history.empty()) {
        user += "conversation history:\n";
        for (const auto& turn : ctx.history)
            user += std::string(to_string(turn.speaker)) + ": " + turn.utterance + "\n";
    }
    user += "user query: " + ctx.current_query + "\n";
    user += "follow-up questions:\n";
    for (std::size_t i = 0; i < suggestions.candidates.size(); ++i)
        user += std::to_string(i + 1) + ". " + suggestions.candidates[i] + "\n";
    p.user_text = std::move(user);
    return p;
}

std::optional<json> extract_json_object(std::string_view raw) {
    const std::string text = strip_code_fences(raw);
    std::string_view sv(text);
    for (auto start = sv.find('{'); start != std::string_view::npos;
         start = sv.find('{', start + 1)) {
        auto end = balanced_end(sv, start);
        if (!end) continue;
        auto parsed = json::parse(sv.substr(start, *end - start), nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object()) return parsed;
    }
    return std::nullopt;
}

int count_tokens(std::string_view text) {
    int n = 0;
    bool in_word = false;
    for (char c : text) {
        bool ws = kWhitespace.find(c) != std::string_view::npos;
        if (!ws && !in_word) ++n;
        in_word = !ws;
    }
    return n;
}

SuggestionSet parse_options(std::string_view raw, int k, std::string context_ref) {
    SuggestionSet s;
    s.context_ref = std::move(context_ref);
    s.k = k;
    s.raw_output = std::string(raw);

    auto fail = [&s](std::string why) {
        s.format_ok = false;
        s.candidates.clear();
        s.warnings.push_back("format_error: " + std::move(why));
        return s;
    };

    auto obj = extract_json_object(raw);
    if (!obj) return fail("no JSON object");
    auto it = obj->find("options");
    if (it == obj->end() || !it->is_array()) return fail("missing \"options\" array");
    if (static_cast<int>(it->size()) != k)
        return fail("expected " + std::to_string(k) + " options, got " +
                    std::to_string(it->size()));

    std::set<std::string> seen;
    for (const auto& item : *it) {
        if (!item.is_string()) return fail("non-string option");
        auto text = trim(item.get<std::string>());
        if (text.empty()) return fail("empty option");
        if (!seen.insert(text).second) return fail("duplicate option '" + text + "'");
        s.candidates.push_back(std::move(text));
    }
    for (std::size_t i = 0; i < s.candidates.size(); ++i) {
        int tokens = count_tokens(s.candidates[i]);
        if (tokens > kMaxOptionTokens)
            s.warnings.push_back("option " + std::to_string(i + 1) + " has " +
                                 std::to_string(tokens) + " tokens");
    }
    s.format_ok = true;
    return s;
}

JudgeVerdict parse_judge_output(std::string_view raw, int k, std::string context_ref) {
    if (k <= 0) throw PreconditionError("k must be positive");
    auto obj = extract_json_object(raw);
    if (!obj) throw ParseError("judge output holds no JSON object");
    auto score_it = obj->find("score");
    if (score_it == obj->end()) throw ParseError("judge output lacks \"score\"");
    auto score = as_count(*score_it, k);
    if (!score) throw ParseError("\"score\" is not an integer in [0, k]");

    JudgeVerdict v;
    v.context_ref = std::move(context_ref);
    v.aggregate_score = *score;
    v.raw_output = std::string(raw);
    if (auto r = obj->find("reason"); r != obj->end() && r->is_string())
        v.reason = r->get<std::string>();

    if (auto pq = obj->find("per_question"); pq != obj->end() && !pq->is_null()) {
        if (!pq->is_array() || static_cast<int>(pq->size()) != k)
            throw ParseError("\"per_question\" must hold exactly " + std::to_string(k) +
                             " entries");
        for (const auto& entry : *pq) {
            if (!entry.is_object()) throw ParseError("\"per_question\" entry is not an object");
            CandidateScores c;
            for (int d = 0; d < 3; ++d) {
                auto f = entry.find(kDimensionKeys[d]);
                if (f == entry.end())
                    throw ParseError(std::string("\"per_question\" entry lacks ") +
                                     kDimensionKeys[d]);
                auto b = as_binary(*f);
                if (!b) throw ParseError(std::string(kDimensionKeys[d]) + " is not binary");
                set_dim(c, d, *b);
            }
            v.per_candidate.push_back(c);
        }
        if (k - failing_count(v.per_candidate) != v.aggregate_score)
            throw ParseError("\"score\" disagrees with \"per_question\"");
        return v;
    }

    std::array<int, 3> counts{};
    for (int d = 0; d < 3; ++d) {
        auto f = obj->find(kDimensionKeys[d]);
        if (f == obj->end())
            throw ParseError(std::string("judge output lacks ") + kDimensionKeys[d]);
        auto c = as_count(*f, k);
        if (!c) throw ParseError(std::string(kDimensionKeys[d]) + " is not a count in [0, k]");
        counts[static_cast<std::size_t>(d)] = *c;
    }
    v.per_candidate = reconstruct_from_counts(k, v.aggregate_score, counts);
    // A full score pins every candidate; anything less is a guess.
    v.degraded = v.aggregate_score != k;
    return v;
}

std::string serialize_judge_output(const JudgeVerdict& verdict) {
    json j;
    j["score"] = verdict.aggregate_score;
    j["reason"] = verdict.reason;
    std::array<int, 3> counts{};
    json per_question = json::array();
    for (const auto& c : verdict.per_candidate) {
        counts[0] += c.answerable;
        counts[1] += c.factual;
        counts[2] += c.informative;
        per_question.push_back(json{{kDimensionKeys[0], c.answerable},
                                    {kDimensionKeys[1], c.factual},
                                    {kDimensionKeys[2], c.informative}});
    }
    for (int d = 0; d < 3; ++d) j[kDimensionKeys[d]] = counts[static_cast<std::size_t>(d)];
    if (!verdict.degraded) j["per_question"] = std::move(per_question);
    return j.dump();
}

std::string serialize_options(const std::vector<std::string>& options) {
    return json{{"options", options}}.dump();
}

}  // namespace coldqs::prompt
