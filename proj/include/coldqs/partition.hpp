#pragma once

#include <filesystem>
#include <vector>

#include "coldqs/types.hpp"

namespace coldqs {

inline constexpr int kPartitionSchemaVersion = 1;

DatasetPartition load_partition(const std::filesystem::path& path, PartitionName name);
void save_partition(const std::filesystem::path& path, const DatasetPartition& partition);

std::vector<std::string> canonical_lines(const DatasetPartition& partition);

// Empty result iff every type invariant holds. Non-alternating history is a
// warning; everything else is an error.
std::vector<Finding> validate_partition(const DatasetPartition& partition);

bool has_errors(const std::vector<Finding>& findings);

// JudgeVerdict invariants: aggregate matches per-candidate failures, binary fields.
std::vector<Finding> validate_verdict(const JudgeVerdict& verdict);

}  // namespace coldqs
