#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace coldqs {

using json = nlohmann::json;

enum class Speaker { user, assistant };
enum class Intent { small_talk, product_recommendation, product_qa, platform_qa, unknown };
enum class ClickLabel { clicked, unclicked, unlabeled };
enum class PartitionName { click, unclick, pseudo, hard, test, sft_mix };
enum class Dimension { answerable, factual, informative };
enum class Severity { warning, error };

std::string_view to_string(Speaker v);
std::string_view to_string(Intent v);
std::string_view to_string(ClickLabel v);
std::string_view to_string(PartitionName v);
std::string_view to_string(Dimension v);
std::string_view to_string(Severity v);

// Throw ValidationError on unknown names.
Speaker parse_speaker(std::string_view s);
Intent parse_intent(std::string_view s);
ClickLabel parse_click_label(std::string_view s);
PartitionName parse_partition_name(std::string_view s);
Dimension parse_dimension(std::string_view s);

inline constexpr Intent kAllIntents[] = {Intent::small_talk, Intent::product_recommendation,
                                         Intent::product_qa, Intent::platform_qa,
                                         Intent::unknown};
inline constexpr Dimension kAllDimensions[] = {Dimension::answerable, Dimension::factual,
                                               Dimension::informative};

struct Turn {
    Speaker speaker = Speaker::user;
    std::string utterance;

    bool operator==(const Turn&) const = default;
};

/// One user turn's full input: profile, history, current query and intent.
struct DialogueContext {
    std::string record_id;
    std::string user_profile;
    std::vector<Turn> history;
    std::string current_query;
    Intent intent = Intent::unknown;
    ClickLabel click_label = ClickLabel::unlabeled;
    // Index of the clicked candidate when the log recorded it. Nothing consumes it.
    std::optional<int> clicked_index;

    bool operator==(const DialogueContext&) const = default;
};

/// An ordered group of k candidate follow-up queries produced from one model output.
struct SuggestionSet {
    std::string context_ref;
    std::vector<std::string> candidates;
    int k = 3;
    bool format_ok = false;
    std::string raw_output;
    std::vector<std::string> warnings;

    bool operator==(const SuggestionSet&) const = default;
};

/// Binary pass/fail per quality dimension for one candidate.
struct CandidateScores {
    int answerable = 0;
    int factual = 0;
    int informative = 0;

    int get(Dimension d) const;
    bool all_pass() const { return answerable == 1 && factual == 1 && informative == 1; }
    bool operator==(const CandidateScores&) const = default;
};

struct JudgeVerdict {
    std::string context_ref;
    std::vector<CandidateScores> per_candidate;
    int aggregate_score = 0;
    std::string reason;
    std::string raw_output;
    // Per-candidate scores were reconstructed from dimension-level counts.
    bool degraded = false;

    int k() const { return static_cast<int>(per_candidate.size()); }
    bool operator==(const JudgeVerdict&) const = default;
};

struct RewardBreakdown {
    int format_reward = 0;
    std::vector<double> per_candidate_products;
    double rollout_reward = 0.0;

    bool operator==(const RewardBreakdown&) const = default;
};

struct ScoredRollout {
    SuggestionSet suggestion_set;
    RewardBreakdown reward;
    std::optional<double> advantage;
    bool degraded = false;

    bool operator==(const ScoredRollout&) const = default;
};

struct RolloutGroup {
    std::string context_ref;
    std::vector<ScoredRollout> rollouts;

    std::size_t n() const { return rollouts.size(); }
    bool operator==(const RolloutGroup&) const = default;
};

struct UncertaintyRecord {
    std::string context_ref;
    std::vector<double> per_candidate_rewards;
    double u = 0.0;
    // Set for malformed generations: u is pinned to 0 and the record is never sampled.
    bool excluded = false;
    bool degraded = false;

    bool operator==(const UncertaintyRecord&) const = default;
};

/// A dialogue context plus whatever a stage attached to it.
struct PartitionRecord {
    DialogueContext context;
    std::optional<SuggestionSet> suggestions;
    std::optional<JudgeVerdict> verdict;
    std::optional<UncertaintyRecord> uncertainty;

    const std::string& id() const { return context.record_id; }
    bool operator==(const PartitionRecord&) const = default;
};

struct DatasetPartition {
    PartitionName name = PartitionName::click;
    std::vector<PartitionRecord> records;

    // Hex SHA-256 over the canonical serialization of the records.
    std::string content_digest() const;
    bool operator==(const DatasetPartition&) const = default;
};

struct Finding {
    Severity severity = Severity::error;
    std::string record_id;
    std::string message;

    bool operator==(const Finding&) const = default;
};

/// Opaque handle to a served model. The trainer hook swaps it between rounds.
struct EndpointRef {
    std::string base_url;
    std::string model_name;

    bool operator==(const EndpointRef&) const = default;
};

void to_json(json& j, const Turn& v);
void from_json(const json& j, Turn& v);
void to_json(json& j, const DialogueContext& v);
void from_json(const json& j, DialogueContext& v);
void to_json(json& j, const SuggestionSet& v);
void from_json(const json& j, SuggestionSet& v);
void to_json(json& j, const CandidateScores& v);
void from_json(const json& j, CandidateScores& v);
void to_json(json& j, const JudgeVerdict& v);
void from_json(const json& j, JudgeVerdict& v);
void to_json(json& j, const RewardBreakdown& v);
void from_json(const json& j, RewardBreakdown& v);
void to_json(json& j, const ScoredRollout& v);
void from_json(const json& j, ScoredRollout& v);
void to_json(json& j, const RolloutGroup& v);
void from_json(const json& j, RolloutGroup& v);
void to_json(json& j, const UncertaintyRecord& v);
void from_json(const json& j, UncertaintyRecord& v);
void to_json(json& j, const PartitionRecord& v);
void from_json(const json& j, PartitionRecord& v);
void to_json(json& j, const Finding& v);
void from_json(const json& j, Finding& v);
void to_json(json& j, const EndpointRef& v);
void from_json(const json& j, EndpointRef& v);

}  // namespace coldqs
