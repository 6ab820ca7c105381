#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coldqs/gateway.hpp"
#include "coldqs/types.hpp"

namespace coldqs::eval {

struct JudgedOutputs {
    std::vector<JudgeVerdict> verdicts;
    std::vector<Finding> findings;
    std::size_t unjudged = 0;
};

/// One verdict per suggestion set. Malformed sets get all-zero triples without
/// a judge call; transport or parse failures leave the item unjudged and add a
/// finding. Verdicts come back sorted by context_ref.
JudgedOutputs judge_outputs(const gateway::Gateway& gateway, const gateway::EndpointConfig& judge,
                            const DatasetPartition& contexts,
                            const std::vector<SuggestionSet>& outputs, int parallelism);

// Each throws PreconditionError on empty input.
double strict_accuracy(std::span<const JudgeVerdict> verdicts);
double valid_rate(std::span<const JudgeVerdict> verdicts);
double dimension_accuracy(std::span<const JudgeVerdict> verdicts, Dimension dim);

struct MetricSummary {
    std::size_t queries = 0;
    std::size_t candidates = 0;
    double strict_accuracy = 0.0;
    double valid_rate = 0.0;
    double answerable = 0.0;
    double factual = 0.0;
    double informative = 0.0;
    double degraded_fraction = 0.0;

    std::map<std::string, double> as_map() const;
};

MetricSummary summarize(std::span<const JudgeVerdict> verdicts);

struct IntentBucket {
    std::size_t queries = 0;
    double strict_accuracy = 0.0;
    double valid_rate = 0.0;
};

/// Buckets with no verdicts are absent from the map.
std::map<Intent, IntentBucket> intent_breakdown(std::span<const JudgeVerdict> verdicts,
                                                const DatasetPartition& contexts);

struct MeanStd {
    double mean = 0.0;
    // Sample standard deviation; absent for a single run.
    std::optional<double> std;
};

using RunMetrics = std::map<std::string, double>;

MeanStd mean_std(std::span<const double> values);

/// Calls run_fn(0..repeats-1) and reduces each metric to mean and sample std.
/// Throws PreconditionError when repeats < 1 or runs disagree on metric names.
std::map<std::string, MeanStd> repeated_runs(const std::function<RunMetrics(int)>& run_fn,
                                             int repeats = 3);

/// Fraction of items where judge and human pass/fail labels agree.
double judge_human_agreement(std::span<const bool> judge_labels,
                             std::span<const bool> human_labels);

// Plain-text table in the layout of a results table: one row per metric,
// "mean ± std" in percent.
std::string render_table(const std::map<std::string, MeanStd>& metrics);

}  // namespace coldqs::eval
