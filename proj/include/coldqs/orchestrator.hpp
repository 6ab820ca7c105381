#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "coldqs/config.hpp"
#include "coldqs/gateway.hpp"
#include "coldqs/types.hpp"

namespace coldqs::orchestrator {

// Last completed stage. Ordered; the manifest never moves backwards.
enum class Stage { init, sft_build, rl_round, sampling, iterate, done };

std::string_view to_string(Stage s);
Stage parse_stage(std::string_view s);

struct RoundRecord {
    int iteration = 0;
    EndpointRef policy_in;
    EndpointRef policy_out;
    std::string train_digest;
    std::string export_digest;
    std::size_t contexts = 0;
    std::size_t groups_exported = 0;
    std::size_t groups_skipped = 0;
    std::string pseudo_digest;
    std::string hard_digest;
    std::size_t hard_size = 0;

    bool operator==(const RoundRecord&) const = default;
};

struct FailureRecord {
    std::string stage;
    int iteration = 0;
    int status = 0;
    std::string message;

    bool operator==(const FailureRecord&) const = default;
};

/// Resumable record of pipeline progress. Serialized canonically so two runs
/// that did the same work produce byte-identical files.
struct PipelineManifest {
    Stage stage = Stage::init;
    int iteration = 0;
    int K = 3;
    EndpointRef policy_endpoint;
    EndpointRef judge_endpoint;
    std::map<std::string, std::string> partition_digests;
    json config_snapshot;
    json trainer_hyperparams;
    json ablations;
    std::vector<RoundRecord> rounds;
    // Work-dir-relative paths of hard sets in production order.
    std::vector<std::string> hard_sets;
    std::vector<FailureRecord> failures;
    std::vector<Finding> findings;

    json to_json() const;
    static PipelineManifest from_json(const json& j);
    std::string digest() const;
    bool operator==(const PipelineManifest&) const = default;
};

PipelineManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const PipelineManifest& m);

/// Exclusive lock on a work directory, held for the lifetime of the object.
/// A lock left by a dead process is reclaimed.
class ManifestLock {
public:
    explicit ManifestLock(std::filesystem::path path);
    ~ManifestLock();
    ManifestLock(const ManifestLock&) = delete;
    ManifestLock& operator=(const ManifestLock&) = delete;

private:
    std::filesystem::path path_;
};

/// A prompt/completion pair for supervised fine-tuning.
struct SftPair {
    std::string id;
    std::string source;  // "domain" or "general"
    std::optional<std::string> system;
    std::string prompt;
    std::string completion;

    bool operator==(const SftPair&) const = default;
};

void to_json(json& j, const SftPair& v);
void from_json(const json& j, SftPair& v);

std::vector<SftPair> load_general_corpus(const std::filesystem::path& path);

struct SftDataset {
    std::vector<SftPair> pairs;
    std::size_t domain = 0;
    std::size_t general = 0;
    std::vector<Finding> findings;

    std::string digest() const;
};

/// Rendered generation prompt -> options JSON for every clicked record, mixed
/// with round(mix_ratio * |click|) general pairs and shuffled under `seed`.
/// Throws ValidationError on an empty click partition or a click record
/// without a well-formed suggestion set.
SftDataset build_sft_dataset(const DatasetPartition& click, const std::vector<SftPair>& general,
                             double mix_ratio, std::uint64_t seed);

// Click records first, then hard records not already present.
DatasetPartition merge_training_contexts(const DatasetPartition& click,
                                         const DatasetPartition& hard);

struct TrainerResult {
    EndpointRef policy_endpoint;
};

/// Runs `argv + {export, hyperparams, result}` and reads the new endpoint from
/// the result file. Empty argv runs the built-in no-op that echoes the input
/// endpoint. Throws TrainerHookError on a nonzero exit or an unreadable result.
TrainerResult run_trainer_hook(const std::vector<std::string>& argv,
                               const std::filesystem::path& export_path,
                               const std::filesystem::path& hyperparams_path,
                               const std::filesystem::path& result_path);

// What the shipped no-op hook does: copy the input policy endpoint from the
// hyperparams file into the result file.
void noop_trainer_hook(const std::filesystem::path& hyperparams_path,
                       const std::filesystem::path& result_path);

struct PredictionResult {
    std::vector<SuggestionSet> outputs;
    std::vector<Finding> findings;
};

class Orchestrator {
public:
    Orchestrator(PipelineConfig config, std::shared_ptr<const gateway::Backend> backend);

    const PipelineConfig& config() const { return config_; }
    const gateway::Gateway& gateway() const { return gateway_; }
    std::filesystem::path manifest_path() const;

    // Fresh manifest when none exists on disk. An existing manifest written
    // under a different config is rejected unless check_config is false.
    PipelineManifest load_or_init(bool check_config = true) const;

    /// Stage 1. Builds the SFT mix and hands it to the trainer hook.
    void build_sft(PipelineManifest& m) const;

    /// One reinforcement-learning round over `train`: n rollouts per context,
    /// judged, scored, exported, then the trainer hook. Hook failure leaves the
    /// manifest at its previous stage plus a failure record, and rethrows.
    RoundRecord run_rl_round(PipelineManifest& m, const DatasetPartition& train,
                             int iteration) const;

    /// Pseudo-labels the unclicked partition with the current policy and
    /// selects the next hard set. Fills the pseudo/hard fields of `round`.
    void sample(PipelineManifest& m, RoundRecord& round, int iteration) const;

    /// Loop of K rounds {RL on click + hard, pseudo-label, select}. Runs the
    /// warm-up stages first when the manifest has not reached them. Each round
    /// is persisted before `on_round` fires.
    PipelineManifest iterate(PipelineManifest m, int K,
                             const std::function<void(const PipelineManifest&)>& on_round = {}) const;

    /// Requires a finished manifest unless `endpoint_override` is given.
    PredictionResult predict_testset(const PipelineManifest& m, const DatasetPartition& test,
                                     std::uint64_t seed,
                                     const std::optional<gateway::EndpointConfig>& endpoint_override =
                                         std::nullopt) const;

    // Loads an input partition and pins (or checks) its digest in the manifest.
    DatasetPartition load_input(PipelineManifest& m, PartitionName name) const;

    // Human-readable stage plan without touching the network.
    json plan(const PipelineManifest& m, int K) const;

private:
    gateway::EndpointConfig policy_endpoint(const PipelineManifest& m) const;
    DatasetPartition current_hard(const PipelineManifest& m) const;
    void persist(const PipelineManifest& m) const;

    PipelineConfig config_;
    gateway::Gateway gateway_;
};

std::shared_ptr<const gateway::Backend> make_backend(const PipelineConfig& config);

}  // namespace coldqs::orchestrator
