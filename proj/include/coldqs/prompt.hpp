#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "coldqs/types.hpp"

namespace coldqs::prompt {

enum class TemplateId { general_intent, product_recommendation, judge };

std::string_view to_string(TemplateId id);

struct PromptText {
    std::optional<std::string> system_text;
    std::string user_text;
    TemplateId template_id = TemplateId::general_intent;

    // System and user text joined the way a single-message backend would see them.
    std::string flattened() const;
    bool operator==(const PromptText&) const = default;
};

// Template bodies exactly as they ship. The golden files under templates/ must
// match these byte for byte.
std::string_view template_text(TemplateId id);

// Instruction appended after the judge template asking for per-candidate fields.
std::string judge_schema_extension(int k);

// Soft length bound for one option, in whitespace-delimited tokens.
inline constexpr int kMaxOptionTokens = 30;

/// Selects the product recommendation template for product_recommendation
/// intent and the general template otherwise. The context block (profile,
/// history in turn order, current query) goes in the user message.
PromptText render_generation_prompt(const DialogueContext& ctx);

/// Throws PreconditionError when `suggestions.format_ok` is false.
PromptText render_judge_prompt(const DialogueContext& ctx, const SuggestionSet& suggestions);

// First balanced {...} that parses as a JSON object, after dropping code fences.
std::optional<json> extract_json_object(std::string_view raw);

/// Never throws. Failures clear format_ok and record the reason in warnings.
SuggestionSet parse_options(std::string_view raw, int k, std::string context_ref = {});

/// Accepts the per-candidate schema ("per_question") and falls back to the
/// dimension-count schema, which yields a reconstructed verdict. Throws
/// ParseError when no object, no "score", or the fields contradict each other.
JudgeVerdict parse_judge_output(std::string_view raw, int k, std::string context_ref = {});

// Judge-schema JSON for a verdict. Degraded verdicts serialize counts only.
std::string serialize_judge_output(const JudgeVerdict& verdict);

// Options JSON as the generation prompt requests it. Used for SFT completions.
std::string serialize_options(const std::vector<std::string>& options);

int count_tokens(std::string_view text);

}  // namespace coldqs::prompt
