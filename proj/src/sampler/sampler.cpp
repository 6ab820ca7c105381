#include "coldqs/sampler.hpp"

#include <algorithm>

#include "coldqs/canonical.hpp"
#include "coldqs/errors.hpp"
#include "coldqs/prompt.hpp"
#include "coldqs/reward.hpp"

namespace coldqs::sampler {

double uncertainty_score(std::span<const double> rewards) {
    if (rewards.empty()) throw PreconditionError("uncertainty_score needs at least one reward");
    double mean = 0.0;
    for (double r : rewards) {
        if (!(r >= 0.0 && r <= 1.0)) throw PreconditionError("reward outside [0,1]");
        mean += r;
    }
    mean /= static_cast<double>(rewards.size());
    double acc = 0.0;
    for (double r : rewards) acc += (r - mean) * (r - mean);
    return acc / static_cast<double>(rewards.size());
}

UncertaintyRecord make_uncertainty_record(const std::string& context_ref,
                                          std::vector<double> per_candidate_rewards) {
    UncertaintyRecord rec;
    rec.context_ref = context_ref;
    rec.u = uncertainty_score(per_candidate_rewards);
    rec.per_candidate_rewards = std::move(per_candidate_rewards);
    return rec;
}

DatasetPartition select_hard(const DatasetPartition& pseudo, std::size_t budget, double min_u) {
    if (budget == 0) throw PreconditionError("hard-set budget must be positive");
    std::vector<const PartitionRecord*> eligible;
    for (const auto& r : pseudo.records) {
        if (!r.uncertainty)
            throw PreconditionError("record '" + r.id() + "' carries no uncertainty score");
        if (!r.uncertainty->excluded && r.uncertainty->u >= min_u) eligible.push_back(&r);
    }
    std::sort(eligible.begin(), eligible.end(), [](const auto* a, const auto* b) {
        if (a->uncertainty->u != b->uncertainty->u) return a->uncertainty->u > b->uncertainty->u;
        return a->id() < b->id();
    });
    DatasetPartition hard;
    hard.name = PartitionName::hard;
    for (std::size_t i = 0; i < eligible.size() && i < budget; ++i)
        hard.records.push_back(*eligible[i]);
    return hard;
}

PseudoLabelResult build_pseudo(const PseudoLabelRequest& req, const DatasetPartition& unclick) {
    if (!req.gateway) throw PreconditionError("build_pseudo needs a gateway");
    PseudoLabelResult out;
    out.pseudo.name = PartitionName::pseudo;
    const auto& records = unclick.records;

    std::vector<gateway::ChatRequest> gen;
    gen.reserve(records.size());
    for (const auto& r : records)
        gen.push_back({prompt::render_generation_prompt(r.context), derive_seed(req.seed, r.id())});
    auto generations = req.gateway->complete_batch(req.policy, gen, req.parallelism);

    std::vector<SuggestionSet> sets(records.size());
    std::vector<gateway::ChatRequest> judge_requests;
    std::vector<std::size_t> judged;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!generations[i].ok()) continue;
        sets[i] = prompt::parse_options(*generations[i].text, req.k, records[i].id());
        if (sets[i].format_ok) {
            judge_requests.push_back({prompt::render_judge_prompt(records[i].context, sets[i]),
                                      std::nullopt});
            judged.push_back(i);
        }
    }
    auto verdict_texts = req.gateway->complete_batch(req.judge, judge_requests, req.parallelism);
    std::vector<std::optional<gateway::Completion>> verdict_for(records.size());
    for (std::size_t j = 0; j < judged.size(); ++j) verdict_for[judged[j]] = verdict_texts[j];

    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& id = records[i].id();
        if (!generations[i].ok()) {
            ++out.transport_failures;
            out.findings.push_back({Severity::error, id, "generation failed: " + *generations[i].error});
            continue;
        }
        PartitionRecord rec = records[i];
        rec.suggestions = sets[i];
        if (!sets[i].format_ok) {
            UncertaintyRecord u;
            u.context_ref = id;
            u.per_candidate_rewards.assign(static_cast<std::size_t>(req.k), 0.0);
            u.excluded = true;
            rec.uncertainty = std::move(u);
            out.pseudo.records.push_back(std::move(rec));
            continue;
        }
        const auto& vc = *verdict_for[i];
        if (!vc.ok()) {
            ++out.transport_failures;
            out.findings.push_back({Severity::error, id, "judging failed: " + *vc.error});
            continue;
        }
        try {
            auto verdict = prompt::parse_judge_output(*vc.text, req.k, id);
            auto u = make_uncertainty_record(id, reward::per_candidate_rewards(verdict));
            u.degraded = verdict.degraded;
            rec.verdict = std::move(verdict);
            rec.uncertainty = std::move(u);
            out.pseudo.records.push_back(std::move(rec));
        } catch (const ParseError& e) {
            out.findings.push_back({Severity::error, id, std::string("judge output unusable: ") + e.what()});
        }
    }
    return out;
}

}  // namespace coldqs::sampler
