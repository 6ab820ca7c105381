#pragma once

#include <optional>
#include <span>
#include <vector>

#include "coldqs/types.hpp"

namespace coldqs::reward {

inline constexpr double kAdvantageEpsilon = 1e-6;

// 1 iff the rollout parsed cleanly.
int format_reward(const SuggestionSet& suggestions);

// answerable * factual * informative for candidate i. Throws PreconditionError
// when i is out of range.
double per_candidate_reward(const JudgeVerdict& verdict, std::size_t i);

std::vector<double> per_candidate_rewards(const JudgeVerdict& verdict);

/// r_f * (1/k) * sum(products). Throws PreconditionError on an empty list,
/// r_f outside {0,1}, or a product outside [0,1].
double rollout_reward(int format_reward, std::span<const double> products);

/// (r_i - mean) / (population std + epsilon); all zeros when every reward is
/// equal. Throws PreconditionError when fewer than two rewards are given.
std::vector<double> group_advantages(std::span<const double> rewards,
                                     double epsilon = kAdvantageEpsilon);

/// Rewards for one rollout. Malformed sets score zero and need no verdict.
RewardBreakdown score_rollout(const SuggestionSet& suggestions,
                              const std::optional<JudgeVerdict>& verdict);

/// Scores n rollouts of one context and fills their advantages. `verdicts` is
/// aligned with `sets`; a verdict is required for every well-formed set.
RolloutGroup score_rollout_group(const std::string& context_ref,
                                 const std::vector<SuggestionSet>& sets,
                                 const std::vector<std::optional<JudgeVerdict>>& verdicts,
                                 double epsilon = kAdvantageEpsilon);

}  // namespace coldqs::reward
