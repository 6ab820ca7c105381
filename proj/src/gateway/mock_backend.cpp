#include <array>
#include <random>

#include "coldqs/canonical.hpp"
#include "coldqs/errors.hpp"
#include "coldqs/gateway.hpp"

namespace coldqs::gateway {

namespace {

// Phrase bank for generated options. `{}` is replaced by the query topic.
constexpr std::array<std::string_view, 16> kPatterns{
    "What are the best-selling {} this month?",
    "Can you recommend {} under 50 USD?",
    "Which {} have the highest customer ratings?",
    "Are there any discounts on {} today?",
    "What features should I look for in {}?",
    "Do you have {} with free shipping?",
    "How long does delivery take for {}?",
    "Which brands make durable {}?",
    "Are there eco-friendly options for {}?",
    "I'm buying {} as a gift. Any suggestions under 100 USD?",
    "What is the return policy for {}?",
    "Can you show me {} with a warranty of at least 2 years?",
    // Deliberately weak phrasings the mock judge rejects.
    "What would you like to know about {}?",
    "Are there cheaper {}?",
    "Can I buy {} for 1 USD?",
    "Tell me about {}.",
};

double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

std::uint64_t mix(std::uint64_t seed, std::string_view model, std::string_view a,
                  std::string_view b = {}) {
    std::string label;
    label.reserve(model.size() + a.size() + b.size() + 2);
    label.append(model).push_back('\x1f');
    label.append(a).push_back('\x1f');
    label.append(b);
    return derive_seed(seed, label);
}

std::string query_topic(const prompt::PromptText& p) {
    constexpr std::string_view kMarker = "user query: ";
    const auto& text = p.user_text;
    auto pos = text.rfind(kMarker);
    std::string q = pos == std::string::npos ? text : text.substr(pos + kMarker.size());
    if (auto eol = q.find('\n'); eol != std::string::npos) q.resize(eol);
    while (!q.empty() && (q.back() == '?' || q.back() == '.' || q.back() == '!' || q.back() == ' '))
        q.pop_back();
    // Keep at most eight words.
    std::size_t words = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] == ' ' && i > 0 && q[i - 1] != ' ' && ++words == 8) {
            q.resize(i);
            break;
        }
    }
    return q.empty() ? std::string("items") : q;
}

std::string fill(std::string_view pattern, const std::string& topic) {
    std::string out(pattern);
    if (auto at = out.find("{}"); at != std::string::npos) out.replace(at, 2, topic);
    return out;
}

std::vector<std::string> judged_candidates(const prompt::PromptText& p) {
    constexpr std::string_view kMarker = "follow-up questions:\n";
    std::vector<std::string> out;
    auto pos = p.user_text.rfind(kMarker);
    if (pos == std::string::npos) return out;
    std::string_view rest(p.user_text);
    rest.remove_prefix(pos + kMarker.size());
    while (!rest.empty()) {
        auto eol = rest.find('\n');
        auto line = rest.substr(0, eol);
        rest.remove_prefix(eol == std::string_view::npos ? rest.size() : eol + 1);
        auto dot = line.find(". ");
        if (dot == std::string_view::npos) continue;
        out.emplace_back(line.substr(dot + 2));
    }
    return out;
}

}  // namespace

std::string_view to_string(MockOptions::Behavior b) {
    return b == MockOptions::Behavior::echo_template ? "echo-template" : "fault-injection";
}

MockOptions::Behavior parse_mock_behavior(std::string_view s) {
    if (s == "echo-template") return MockOptions::Behavior::echo_template;
    if (s == "fault-injection") return MockOptions::Behavior::fault_injection;
    throw ValidationError("unknown mock behavior '" + std::string(s) + "'");
}

void to_json(json& j, const MockOptions& v) {
    j = json{{"behavior", to_string(v.behavior)},
             {"seed", v.seed},
             {"failure_rate", v.failure_rate},
             {"malformed_rate", v.malformed_rate},
             {"aggregate_only_rate", v.aggregate_only_rate},
             {"pass_answerable", v.pass_answerable},
             {"pass_factual", v.pass_factual},
             {"pass_informative", v.pass_informative},
             {"options_count", v.options_count}};
}

void from_json(const json& j, MockOptions& v) {
    v = MockOptions{};
    if (auto it = j.find("behavior"); it != j.end())
        v.behavior = parse_mock_behavior(it->get<std::string>());
    v.seed = j.value("seed", v.seed);
    v.failure_rate = j.value("failure_rate", v.failure_rate);
    v.malformed_rate = j.value("malformed_rate", v.malformed_rate);
    v.aggregate_only_rate = j.value("aggregate_only_rate", v.aggregate_only_rate);
    v.pass_answerable = j.value("pass_answerable", v.pass_answerable);
    v.pass_factual = j.value("pass_factual", v.pass_factual);
    v.pass_informative = j.value("pass_informative", v.pass_informative);
    v.options_count = j.value("options_count", v.options_count);
}

Attempt MockBackend::send(const EndpointConfig& cfg, const ChatRequest& request,
                          int attempt) const {
    if (options_.behavior == MockOptions::Behavior::fault_injection && options_.failure_rate > 0) {
        const auto h = mix(options_.seed, cfg.model_name, request.prompt.flattened(),
                           "fault/" + std::to_string(request.seed.value_or(0)) + "/" +
                               std::to_string(attempt));
        if (unit(h) < options_.failure_rate)
            return {Attempt::Status::retryable, {}, 500, "HTTP 500 (injected)"};
    }
    if (request.prompt.template_id == prompt::TemplateId::judge)
        return Attempt::success(judge(cfg, request));
    return Attempt::success(generate(cfg, request));
}

std::string MockBackend::generate(const EndpointConfig& cfg, const ChatRequest& request) const {
    std::mt19937_64 rng(mix(options_.seed, cfg.model_name, request.prompt.flattened(),
                            std::to_string(request.seed.value_or(0))));
    const auto topic = query_topic(request.prompt);
    const int k = std::max(1, options_.options_count);

    std::vector<std::size_t> order(kPatterns.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = 0; i < order.size(); ++i) {
        auto j = i + static_cast<std::size_t>(bounded_draw(rng, order.size() - i));
        std::swap(order[i], order[j]);
    }
    std::vector<std::string> options;
    for (int i = 0; i < k; ++i)
        options.push_back(fill(kPatterns[order[static_cast<std::size_t>(i) % order.size()]], topic));

    if (unit(rng()) < options_.malformed_rate) {
        switch (bounded_draw(rng, 4)) {
            case 0: return "I'm sorry, I can't suggest anything for that.";
            case 1:
                if (options.size() > 1) options.back() = options.front();
                else options.push_back(options.front());
                return json{{"options", options}}.dump();
            case 2:
                options.pop_back();
                return json{{"options", options}}.dump();
            default: {
                auto s = json{{"options", options}}.dump();
                return s.substr(0, s.size() / 2);
            }
        }
    }
    auto body = json{{"options", options}}.dump(2);
    switch (bounded_draw(rng, 4)) {
        case 0: return "```json\n" + body + "\n```";
        case 1: return "Here are the follow-up options:\n" + body;
        default: return body;
    }
}

std::string MockBackend::judge(const EndpointConfig& cfg, const ChatRequest& request) const {
    const auto candidates = judged_candidates(request.prompt);
    JudgeVerdict v;
    for (const auto& c : candidates) {
        CandidateScores s;
        s.answerable = unit(mix(options_.seed, cfg.model_name, c, "ans")) < options_.pass_answerable;
        s.factual = unit(mix(options_.seed, cfg.model_name, c, "fact")) < options_.pass_factual;
        s.informative =
            unit(mix(options_.seed, cfg.model_name, c, "info")) < options_.pass_informative;
        if (c.starts_with("What would you like")) s.answerable = 0;
        if (c.find(" for 1 USD") != std::string::npos) s.factual = 0;
        if (c.starts_with("Are there cheaper") || c.starts_with("Tell me about"))
            s.informative = 0;
        v.per_candidate.push_back(s);
    }
    int failing = 0;
    for (const auto& s : v.per_candidate) failing += s.all_pass() ? 0 : 1;
    v.aggregate_score = static_cast<int>(v.per_candidate.size()) - failing;
    v.reason = failing == 0 ? "all follow-up questions comply"
                            : std::to_string(failing) + " follow-up question(s) violate a rule";
    v.degraded = unit(mix(options_.seed, cfg.model_name, request.prompt.user_text, "schema")) <
                 options_.aggregate_only_rate;
    return prompt::serialize_judge_output(v);
}

}  // namespace coldqs::gateway
