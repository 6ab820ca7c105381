#include "coldqs/reward.hpp"

#include <algorithm>
#include <cmath>

#include "coldqs/errors.hpp"

namespace coldqs::reward {

int format_reward(const SuggestionSet& suggestions) { return suggestions.format_ok ? 1 : 0; }

double per_candidate_reward(const JudgeVerdict& verdict, std::size_t i) {
    if (i >= verdict.per_candidate.size())
        throw PreconditionError("candidate index " + std::to_string(i) + " out of range for k=" +
                                std::to_string(verdict.per_candidate.size()));
    const auto& c = verdict.per_candidate[i];
    return static_cast<double>(c.answerable * c.factual * c.informative);
}

std::vector<double> per_candidate_rewards(const JudgeVerdict& verdict) {
    std::vector<double> out;
    out.reserve(verdict.per_candidate.size());
    for (std::size_t i = 0; i < verdict.per_candidate.size(); ++i)
        out.push_back(per_candidate_reward(verdict, i));
    return out;
}

double rollout_reward(int format_reward, std::span<const double> products) {
    if (products.empty()) throw PreconditionError("rollout_reward needs at least one candidate");
    if (format_reward != 0 && format_reward != 1)
        throw PreconditionError("format reward must be 0 or 1");
    double sum = 0.0;
    for (double p : products) {
        if (!(p >= 0.0 && p <= 1.0)) throw PreconditionError("candidate reward outside [0,1]");
        sum += p;
    }
    return static_cast<double>(format_reward) * (sum / static_cast<double>(products.size()));
}

std::vector<double> group_advantages(std::span<const double> rewards, double epsilon) {
    if (rewards.size() < 2) throw PreconditionError("group advantages need n >= 2");
    const auto n = static_cast<double>(rewards.size());
    std::vector<double> out(rewards.size(), 0.0);
    if (std::all_of(rewards.begin(), rewards.end(),
                    [&](double r) { return r == rewards.front(); }))
        return out;

    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= n;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    const double scale = std::sqrt(var / n) + epsilon;
    for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / scale;
    return out;
}

RewardBreakdown score_rollout(const SuggestionSet& suggestions,
                              const std::optional<JudgeVerdict>& verdict) {
    RewardBreakdown b;
    b.format_reward = format_reward(suggestions);
    if (b.format_reward == 0) {
        b.per_candidate_products.assign(static_cast<std::size_t>(std::max(suggestions.k, 1)), 0.0);
        b.rollout_reward = 0.0;
        return b;
    }
    if (!verdict) throw PreconditionError("well-formed rollout for '" + suggestions.context_ref +
                                          "' has no verdict");
    if (verdict->k() != static_cast<int>(suggestions.candidates.size()))
        throw PreconditionError("verdict covers " + std::to_string(verdict->k()) +
                                " candidates, suggestion set has " +
                                std::to_string(suggestions.candidates.size()));
    b.per_candidate_products = per_candidate_rewards(*verdict);
    b.rollout_reward = rollout_reward(b.format_reward, b.per_candidate_products);
    return b;
}

RolloutGroup score_rollout_group(const std::string& context_ref,
                                 const std::vector<SuggestionSet>& sets,
                                 const std::vector<std::optional<JudgeVerdict>>& verdicts,
                                 double epsilon) {
    if (sets.size() != verdicts.size())
        throw PreconditionError("group of " + std::to_string(sets.size()) + " rollouts has " +
                                std::to_string(verdicts.size()) + " verdicts");
    if (sets.size() < 2) throw PreconditionError("rollout group needs n >= 2");

    RolloutGroup g;
    g.context_ref = context_ref;
    std::vector<double> rewards;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        if (sets[i].context_ref != context_ref)
            throw PreconditionError("rollout " + std::to_string(i) + " belongs to '" +
                                    sets[i].context_ref + "', not '" + context_ref + "'");
        ScoredRollout r;
        r.suggestion_set = sets[i];
        r.reward = score_rollout(sets[i], verdicts[i]);
        r.degraded = sets[i].format_ok && verdicts[i] && verdicts[i]->degraded;
        rewards.push_back(r.reward.rollout_reward);
        g.rollouts.push_back(std::move(r));
    }
    auto adv = group_advantages(rewards, epsilon);
    for (std::size_t i = 0; i < adv.size(); ++i) g.rollouts[i].advantage = adv[i];
    return g;
}

}  // namespace coldqs::reward
