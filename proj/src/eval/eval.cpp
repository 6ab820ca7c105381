#include "coldqs/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "coldqs/errors.hpp"
#include "coldqs/prompt.hpp"

namespace coldqs::eval {

namespace {

void require_nonempty(std::span<const JudgeVerdict> verdicts, const char* what) {
    if (verdicts.empty()) throw PreconditionError(std::string(what) + " of an empty verdict list");
}

bool query_passes(const JudgeVerdict& v) {
    return !v.per_candidate.empty() &&
           std::all_of(v.per_candidate.begin(), v.per_candidate.end(),
                       [](const CandidateScores& c) { return c.all_pass(); });
}

}  // namespace

JudgedOutputs judge_outputs(const gateway::Gateway& gw, const gateway::EndpointConfig& judge,
                            const DatasetPartition& contexts,
                            const std::vector<SuggestionSet>& outputs, int parallelism) {
    std::unordered_map<std::string, const DialogueContext*> by_id;
    for (const auto& r : contexts.records) by_id.emplace(r.id(), &r.context);

    JudgedOutputs out;
    std::vector<gateway::ChatRequest> requests;
    std::vector<std::size_t> requested;
    std::vector<std::optional<JudgeVerdict>> verdicts(outputs.size());
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        const auto& set = outputs[i];
        auto ctx = by_id.find(set.context_ref);
        if (ctx == by_id.end())
            throw PreconditionError("output for unknown record '" + set.context_ref + "'");
        if (!set.format_ok) {
            JudgeVerdict v;
            v.context_ref = set.context_ref;
            v.per_candidate.assign(static_cast<std::size_t>(std::max(set.k, 1)), CandidateScores{});
            v.aggregate_score = 0;
            v.reason = "format failure";
            verdicts[i] = std::move(v);
            continue;
        }
        requests.push_back({prompt::render_judge_prompt(*ctx->second, set), std::nullopt});
        requested.push_back(i);
    }

    auto completions = gw.complete_batch(judge, requests, parallelism);
    for (std::size_t j = 0; j < requested.size(); ++j) {
        const auto i = requested[j];
        const auto& set = outputs[i];
        if (!completions[j].ok()) {
            out.findings.push_back({Severity::error, set.context_ref,
                                    "unjudged: " + *completions[j].error});
            continue;
        }
        try {
            verdicts[i] = prompt::parse_judge_output(*completions[j].text,
                                                     static_cast<int>(set.candidates.size()),
                                                     set.context_ref);
        } catch (const ParseError& e) {
            out.findings.push_back({Severity::error, set.context_ref,
                                    std::string("unjudged: ") + e.what()});
        }
    }
    for (auto& v : verdicts) {
        if (v) out.verdicts.push_back(std::move(*v));
        else ++out.unjudged;
    }
    std::sort(out.verdicts.begin(), out.verdicts.end(),
              [](const JudgeVerdict& a, const JudgeVerdict& b) { return a.context_ref < b.context_ref; });
    return out;
}

double strict_accuracy(std::span<const JudgeVerdict> verdicts) {
    require_nonempty(verdicts, "strict accuracy");
    std::size_t pass = 0;
    for (const auto& v : verdicts) pass += query_passes(v) ? 1 : 0;
    return static_cast<double>(pass) / static_cast<double>(verdicts.size());
}

double valid_rate(std::span<const JudgeVerdict> verdicts) {
    require_nonempty(verdicts, "valid rate");
    std::size_t pass = 0;
    std::size_t total = 0;
    for (const auto& v : verdicts) {
        for (const auto& c : v.per_candidate) pass += c.all_pass() ? 1 : 0;
        total += v.per_candidate.size();
    }
    if (total == 0) throw PreconditionError("valid rate over verdicts with no candidates");
    return static_cast<double>(pass) / static_cast<double>(total);
}

double dimension_accuracy(std::span<const JudgeVerdict> verdicts, Dimension dim) {
    require_nonempty(verdicts, "dimension accuracy");
    std::size_t pass = 0;
    std::size_t total = 0;
    for (const auto& v : verdicts) {
        for (const auto& c : v.per_candidate) pass += c.get(dim) == 1 ? 1 : 0;
        total += v.per_candidate.size();
    }
    if (total == 0) throw PreconditionError("dimension accuracy over verdicts with no candidates");
    return static_cast<double>(pass) / static_cast<double>(total);
}

std::map<std::string, double> MetricSummary::as_map() const {
    return {{"strict_accuracy", strict_accuracy}, {"valid_rate", valid_rate},
            {"answerable", answerable},           {"factual", factual},
            {"informative", informative},         {"degraded_fraction", degraded_fraction}};
}

MetricSummary summarize(std::span<const JudgeVerdict> verdicts) {
    MetricSummary s;
    s.queries = verdicts.size();
    for (const auto& v : verdicts) s.candidates += v.per_candidate.size();
    s.strict_accuracy = strict_accuracy(verdicts);
    s.valid_rate = valid_rate(verdicts);
    s.answerable = dimension_accuracy(verdicts, Dimension::answerable);
    s.factual = dimension_accuracy(verdicts, Dimension::factual);
    s.informative = dimension_accuracy(verdicts, Dimension::informative);
    const auto degraded = std::count_if(verdicts.begin(), verdicts.end(),
                                        [](const JudgeVerdict& v) { return v.degraded; });
    s.degraded_fraction = static_cast<double>(degraded) / static_cast<double>(verdicts.size());
    return s;
}

std::map<Intent, IntentBucket> intent_breakdown(std::span<const JudgeVerdict> verdicts,
                                                const DatasetPartition& contexts) {
    std::unordered_map<std::string, Intent> intent_of;
    for (const auto& r : contexts.records) intent_of.emplace(r.id(), r.context.intent);

    std::map<Intent, std::vector<JudgeVerdict>> grouped;
    for (const auto& v : verdicts) {
        auto it = intent_of.find(v.context_ref);
        if (it == intent_of.end())
            throw PreconditionError("verdict for unknown record '" + v.context_ref + "'");
        grouped[it->second].push_back(v);
    }
    std::map<Intent, IntentBucket> out;
    for (const auto& [intent, bucket] : grouped) {
        out[intent] = IntentBucket{bucket.size(), strict_accuracy(bucket), valid_rate(bucket)};
    }
    return out;
}

MeanStd mean_std(std::span<const double> values) {
    if (values.empty()) throw PreconditionError("mean of no values");
    MeanStd out;
    for (double v : values) out.mean += v;
    out.mean /= static_cast<double>(values.size());
    if (values.size() >= 2) {
        double acc = 0.0;
        for (double v : values) acc += (v - out.mean) * (v - out.mean);
        out.std = std::sqrt(acc / static_cast<double>(values.size() - 1));
    }
    return out;
}

std::map<std::string, MeanStd> repeated_runs(const std::function<RunMetrics(int)>& run_fn,
                                             int repeats) {
    if (repeats < 1) throw PreconditionError("repeats must be >= 1");
    std::map<std::string, std::vector<double>> columns;
    for (int r = 0; r < repeats; ++r) {
        auto metrics = run_fn(r);
        if (r > 0 && metrics.size() != columns.size())
            throw PreconditionError("runs report different metric sets");
        for (const auto& [name, value] : metrics) {
            if (r > 0 && !columns.contains(name))
                throw PreconditionError("metric '" + name + "' missing from earlier runs");
            columns[name].push_back(value);
        }
    }
    std::map<std::string, MeanStd> out;
    for (const auto& [name, values] : columns) out[name] = mean_std(values);
    return out;
}

double judge_human_agreement(std::span<const bool> judge_labels,
                             std::span<const bool> human_labels) {
    if (judge_labels.size() != human_labels.size())
        throw PreconditionError("judge and human label lists differ in length");
    if (judge_labels.empty()) throw PreconditionError("agreement over no labels");
    std::size_t agree = 0;
    for (std::size_t i = 0; i < judge_labels.size(); ++i)
        agree += judge_labels[i] == human_labels[i] ? 1 : 0;
    return static_cast<double>(agree) / static_cast<double>(judge_labels.size());
}

std::string render_table(const std::map<std::string, MeanStd>& metrics) {
    static const char* kOrder[] = {"strict_accuracy", "valid_rate", "answerable", "factual",
                                   "informative", "degraded_fraction"};
    std::ostringstream os;
    char line[128];
    std::snprintf(line, sizeof line, "%-20s %s\n", "metric", "mean ± std (%)");
    os << line;
    auto row = [&](const std::string& name, const MeanStd& m) {
        if (m.std)
            std::snprintf(line, sizeof line, "%-20s %5.1f ± %.1f\n", name.c_str(), 100.0 * m.mean,
                          100.0 * *m.std);
        else
            std::snprintf(line, sizeof line, "%-20s %5.1f\n", name.c_str(), 100.0 * m.mean);
        os << line;
    };
    for (const char* name : kOrder)
        if (auto it = metrics.find(name); it != metrics.end()) row(name, it->second);
    for (const auto& [name, m] : metrics)
        if (std::find(std::begin(kOrder), std::end(kOrder), name) == std::end(kOrder)) row(name, m);
    return os.str();
}

}  // namespace coldqs::eval
