#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "coldqs/engagement.hpp"
#include "coldqs/orchestrator.hpp"
#include "coldqs/types.hpp"

// Deterministic toy data for demos and tests. Nothing here resembles real logs
// beyond the schema.
namespace coldqs::synthetic {

struct DatasetShape {
    std::size_t click = 100;
    std::size_t unclick = 100;
    std::size_t test = 50;
    std::size_t general = 100;
    int k = 3;
    std::uint64_t seed = 7;
};

struct Dataset {
    DatasetPartition click;
    DatasetPartition unclick;
    DatasetPartition test;
    std::vector<orchestrator::SftPair> general;
};

Dataset make_dataset(const DatasetShape& shape);

// Writes click/unclick/test/general jsonl files plus a mock-backend config.json
// pointing at them. Returns the config path.
std::filesystem::path write_dataset(const std::filesystem::path& dir, const Dataset& data);

struct EventShape {
    std::size_t treatment_users = 500;
    std::size_t control_users = 500;
    // Mean events per user in each arm.
    double treatment_rate = 3.0;
    double control_rate = 2.5;
    std::int64_t start = 1'700'000'000;
    std::int64_t span_seconds = 7 * 24 * 3600;
    std::uint64_t seed = 11;
};

std::vector<engagement::InteractionEvent> make_events(const EventShape& shape);

}  // namespace coldqs::synthetic
