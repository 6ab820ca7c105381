#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "coldqs/gateway.hpp"
#include "coldqs/types.hpp"

namespace coldqs {

struct DataPaths {
    std::string click;
    std::string unclick;
    std::string test;
    std::string general_corpus;
};

struct RewardConfig {
    double advantage_epsilon = 1e-6;
    // Groups holding a reconstructed (count-only) verdict are left out of the
    // GRPO export unless this is set.
    bool include_degraded = false;
};

struct SamplerConfig {
    // 0 means "size of the click partition".
    std::size_t budget = 0;
    double min_u = 0.0;
    // Keep every earlier hard set instead of only the latest one.
    bool accumulate_hard = false;
    // Ablation: train on all unclicked data instead of the uncertainty-selected subset.
    bool no_uncertainty = false;
};

struct OrchestratorConfig {
    int iterations = 3;
    int rollouts_per_context = 8;
    int k = 3;
    // general:domain pair ratio in the SFT mix. 0 disables mixing.
    double mix_ratio = 1.0;
    // Ablation: start reinforcement learning from the initial policy.
    bool skip_sft = false;
    // argv prefix; the hook receives <export> <hyperparams> <result>. Empty
    // selects the built-in no-op hook.
    std::vector<std::string> trainer_hook;
    // Forwarded verbatim to the hook and recorded in the manifest.
    json trainer_hyperparams;
};

struct EvalConfig {
    int repeats = 3;
};

enum class BackendKind { mock, http };

struct PipelineConfig {
    std::uint64_t seed = 42;
    std::string work_dir = "run";
    DataPaths data;
    BackendKind backend = BackendKind::mock;
    gateway::MockOptions mock;
    gateway::EndpointConfig policy;
    gateway::EndpointConfig judge;
    gateway::EndpointConfig eval_judge;
    RewardConfig reward;
    SamplerConfig sampler;
    OrchestratorConfig orchestrator;
    EvalConfig eval;
    int parallelism = 4;

    // Relative paths in the file resolve against this directory.
    std::filesystem::path base_dir;

    std::filesystem::path resolve(const std::string& p) const;
    std::filesystem::path work_path() const { return resolve(work_dir); }

    // Every field with its effective value.
    json to_json() const;
    // to_json() minus location, runtime knobs, eval settings and K, none of
    // which change the work already recorded in a manifest.
    json snapshot() const;
    void validate() const;
};

json default_trainer_hyperparams();

PipelineConfig config_from_json(const json& j, std::filesystem::path base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace coldqs
