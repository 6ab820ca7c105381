#include "coldqs/types.hpp"

#include <array>
#include <utility>

#include "coldqs/canonical.hpp"
#include "coldqs/errors.hpp"

namespace coldqs {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::pair<E, std::string_view>, N>& table,
             std::string_view what) {
    for (const auto& [value, name] : table) {
        if (name == s) return value;
    }
    throw ValidationError("unknown " + std::string(what) + " '" + std::string(s) + "'");
}

template <typename E, std::size_t N>
std::string_view enum_name(E v, const std::array<std::pair<E, std::string_view>, N>& table) {
    for (const auto& [value, name] : table) {
        if (value == v) return name;
    }
    return "?";
}

constexpr std::array<std::pair<Speaker, std::string_view>, 2> kSpeakers{{
    {Speaker::user, "user"},
    {Speaker::assistant, "assistant"},
}};

constexpr std::array<std::pair<Intent, std::string_view>, 5> kIntents{{
    {Intent::small_talk, "small_talk"},
    {Intent::product_recommendation, "product_recommendation"},
    {Intent::product_qa, "product_qa"},
    {Intent::platform_qa, "platform_qa"},
    {Intent::unknown, "unknown"},
}};

constexpr std::array<std::pair<ClickLabel, std::string_view>, 3> kClickLabels{{
    {ClickLabel::clicked, "clicked"},
    {ClickLabel::unclicked, "unclicked"},
    {ClickLabel::unlabeled, "unlabeled"},
}};

constexpr std::array<std::pair<PartitionName, std::string_view>, 6> kPartitionNames{{
    {PartitionName::click, "click"},
    {PartitionName::unclick, "unclick"},
    {PartitionName::pseudo, "pseudo"},
    {PartitionName::hard, "hard"},
    {PartitionName::test, "test"},
    {PartitionName::sft_mix, "sft_mix"},
}};

constexpr std::array<std::pair<Dimension, std::string_view>, 3> kDimensions{{
    {Dimension::answerable, "answerable"},
    {Dimension::factual, "factual"},
    {Dimension::informative, "informative"},
}};

constexpr std::array<std::pair<Severity, std::string_view>, 2> kSeverities{{
    {Severity::warning, "warning"},
    {Severity::error, "error"},
}};

template <typename T>
void read_optional(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->template get<T>();
}

}  // namespace

std::string_view to_string(Speaker v) { return enum_name(v, kSpeakers); }
std::string_view to_string(Intent v) { return enum_name(v, kIntents); }
std::string_view to_string(ClickLabel v) { return enum_name(v, kClickLabels); }
std::string_view to_string(PartitionName v) { return enum_name(v, kPartitionNames); }
std::string_view to_string(Dimension v) { return enum_name(v, kDimensions); }
std::string_view to_string(Severity v) { return enum_name(v, kSeverities); }

Speaker parse_speaker(std::string_view s) { return parse_enum(s, kSpeakers, "speaker"); }
Intent parse_intent(std::string_view s) { return parse_enum(s, kIntents, "intent"); }
ClickLabel parse_click_label(std::string_view s) {
    return parse_enum(s, kClickLabels, "click_label");
}
PartitionName parse_partition_name(std::string_view s) {
    return parse_enum(s, kPartitionNames, "partition name");
}
Dimension parse_dimension(std::string_view s) { return parse_enum(s, kDimensions, "dimension"); }

int CandidateScores::get(Dimension d) const {
    switch (d) {
        case Dimension::answerable: return answerable;
        case Dimension::factual: return factual;
        case Dimension::informative: return informative;
    }
    return 0;
}

void to_json(json& j, const Turn& v) {
    j = json{{"speaker", to_string(v.speaker)}, {"utterance", v.utterance}};
}

void from_json(const json& j, Turn& v) {
    v.speaker = parse_speaker(j.at("speaker").get<std::string>());
    v.utterance = j.at("utterance").get<std::string>();
}

void to_json(json& j, const DialogueContext& v) {
    j = json{{"record_id", v.record_id},
             {"user_profile", v.user_profile},
             {"history", v.history},
             {"current_query", v.current_query},
             {"intent", to_string(v.intent)},
             {"click_label", to_string(v.click_label)}};
    if (v.clicked_index) j["clicked_index"] = *v.clicked_index;
}

void from_json(const json& j, DialogueContext& v) {
    v = DialogueContext{};
    v.record_id = j.at("record_id").get<std::string>();
    v.current_query = j.at("current_query").get<std::string>();
    read_optional(j, "user_profile", v.user_profile);
    read_optional(j, "history", v.history);
    if (auto it = j.find("intent"); it != j.end() && !it->is_null())
        v.intent = parse_intent(it->get<std::string>());
    if (auto it = j.find("click_label"); it != j.end() && !it->is_null())
        v.click_label = parse_click_label(it->get<std::string>());
    if (auto it = j.find("clicked_index"); it != j.end() && !it->is_null())
        v.clicked_index = it->get<int>();
}

void to_json(json& j, const SuggestionSet& v) {
    j = json{{"context_ref", v.context_ref}, {"candidates", v.candidates},
             {"k", v.k},                     {"format_ok", v.format_ok},
             {"raw_output", v.raw_output},   {"warnings", v.warnings}};
}

void from_json(const json& j, SuggestionSet& v) {
    v = SuggestionSet{};
    v.context_ref = j.at("context_ref").get<std::string>();
    v.candidates = j.at("candidates").get<std::vector<std::string>>();
    v.k = j.at("k").get<int>();
    v.format_ok = j.at("format_ok").get<bool>();
    read_optional(j, "raw_output", v.raw_output);
    read_optional(j, "warnings", v.warnings);
}

void to_json(json& j, const CandidateScores& v) {
    j = json{{"answerable", v.answerable}, {"factual", v.factual},
             {"informative", v.informative}};
}

void from_json(const json& j, CandidateScores& v) {
    v.answerable = j.at("answerable").get<int>();
    v.factual = j.at("factual").get<int>();
    v.informative = j.at("informative").get<int>();
}

void to_json(json& j, const JudgeVerdict& v) {
    j = json{{"context_ref", v.context_ref},
             {"per_candidate", v.per_candidate},
             {"aggregate_score", v.aggregate_score},
             {"reason", v.reason},
             {"raw_output", v.raw_output},
             {"degraded", v.degraded}};
}

void from_json(const json& j, JudgeVerdict& v) {
    v = JudgeVerdict{};
    v.context_ref = j.at("context_ref").get<std::string>();
    v.per_candidate = j.at("per_candidate").get<std::vector<CandidateScores>>();
    v.aggregate_score = j.at("aggregate_score").get<int>();
    read_optional(j, "reason", v.reason);
    read_optional(j, "raw_output", v.raw_output);
    read_optional(j, "degraded", v.degraded);
}

void to_json(json& j, const RewardBreakdown& v) {
    j = json{{"format_reward", v.format_reward},
             {"per_candidate_products", v.per_candidate_products},
             {"rollout_reward", v.rollout_reward}};
}

void from_json(const json& j, RewardBreakdown& v) {
    v.format_reward = j.at("format_reward").get<int>();
    v.per_candidate_products = j.at("per_candidate_products").get<std::vector<double>>();
    v.rollout_reward = j.at("rollout_reward").get<double>();
}

void to_json(json& j, const ScoredRollout& v) {
    j = json{{"suggestion_set", v.suggestion_set},
             {"reward", v.reward},
             {"degraded", v.degraded},
             {"advantage", v.advantage ? json(*v.advantage) : json(nullptr)}};
}

void from_json(const json& j, ScoredRollout& v) {
    v = ScoredRollout{};
    v.suggestion_set = j.at("suggestion_set").get<SuggestionSet>();
    v.reward = j.at("reward").get<RewardBreakdown>();
    read_optional(j, "degraded", v.degraded);
    if (auto it = j.find("advantage"); it != j.end() && !it->is_null())
        v.advantage = it->get<double>();
}

void to_json(json& j, const RolloutGroup& v) {
    j = json{{"context_ref", v.context_ref}, {"rollouts", v.rollouts}};
}

void from_json(const json& j, RolloutGroup& v) {
    v.context_ref = j.at("context_ref").get<std::string>();
    v.rollouts = j.at("rollouts").get<std::vector<ScoredRollout>>();
}

void to_json(json& j, const UncertaintyRecord& v) {
    j = json{{"context_ref", v.context_ref},
             {"per_candidate_rewards", v.per_candidate_rewards},
             {"u", v.u},
             {"excluded", v.excluded},
             {"degraded", v.degraded}};
}

void from_json(const json& j, UncertaintyRecord& v) {
    v = UncertaintyRecord{};
    v.context_ref = j.at("context_ref").get<std::string>();
    v.per_candidate_rewards = j.at("per_candidate_rewards").get<std::vector<double>>();
    v.u = j.at("u").get<double>();
    read_optional(j, "excluded", v.excluded);
    read_optional(j, "degraded", v.degraded);
}

void to_json(json& j, const PartitionRecord& v) {
    j = v.context;
    if (v.suggestions) j["suggestions"] = *v.suggestions;
    if (v.verdict) j["verdict"] = *v.verdict;
    if (v.uncertainty) j["uncertainty"] = *v.uncertainty;
}

void from_json(const json& j, PartitionRecord& v) {
    v = PartitionRecord{};
    v.context = j.get<DialogueContext>();
    if (auto it = j.find("suggestions"); it != j.end() && !it->is_null())
        v.suggestions = it->get<SuggestionSet>();
    if (auto it = j.find("verdict"); it != j.end() && !it->is_null())
        v.verdict = it->get<JudgeVerdict>();
    if (auto it = j.find("uncertainty"); it != j.end() && !it->is_null())
        v.uncertainty = it->get<UncertaintyRecord>();
}

void to_json(json& j, const Finding& v) {
    j = json{{"severity", to_string(v.severity)}, {"record_id", v.record_id},
             {"message", v.message}};
}

void from_json(const json& j, Finding& v) {
    v.severity = j.at("severity").get<std::string>() == "warning" ? Severity::warning
                                                                   : Severity::error;
    v.record_id = j.at("record_id").get<std::string>();
    v.message = j.at("message").get<std::string>();
}

void to_json(json& j, const EndpointRef& v) {
    j = json{{"base_url", v.base_url}, {"model_name", v.model_name}};
}

void from_json(const json& j, EndpointRef& v) {
    v.base_url = j.value("base_url", std::string{});
    v.model_name = j.at("model_name").get<std::string>();
}

std::string DatasetPartition::content_digest() const {
    std::vector<std::string> lines;
    lines.reserve(records.size());
    for (const auto& r : records) lines.push_back(canonical_dump(json(r)));
    return digest_lines(lines);
}

}  // namespace coldqs
