#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "coldqs/gateway.hpp"
#include "coldqs/types.hpp"

namespace coldqs::sampler {

/// Population variance of the per-candidate rewards of one suggestion set.
/// Throws PreconditionError on an empty list or values outside [0,1].
double uncertainty_score(std::span<const double> per_candidate_rewards);

UncertaintyRecord make_uncertainty_record(const std::string& context_ref,
                                          std::vector<double> per_candidate_rewards);

/// Up to `budget` non-excluded records with u >= min_u, ordered by u
/// descending then record_id ascending. Throws PreconditionError when budget is 0
/// or a record carries no uncertainty.
DatasetPartition select_hard(const DatasetPartition& pseudo, std::size_t budget, double min_u);

struct PseudoLabelRequest {
    const gateway::Gateway* gateway = nullptr;
    gateway::EndpointConfig policy;
    gateway::EndpointConfig judge;
    int k = 3;
    std::uint64_t seed = 0;
    int parallelism = 1;
};

struct PseudoLabelResult {
    DatasetPartition pseudo;
    std::vector<Finding> findings;
    std::size_t transport_failures = 0;
};

/// One generation per unclicked context, judged and scored. Malformed
/// generations are kept with u = 0 and excluded; transport and judge-parse
/// failures drop the record and leave a finding.
PseudoLabelResult build_pseudo(const PseudoLabelRequest& request,
                               const DatasetPartition& unclick);

}  // namespace coldqs::sampler
