#include "coldqs/orchestrator.hpp"

#include <algorithm>
#include <unordered_set>

#include "coldqs/canonical.hpp"
#include "coldqs/errors.hpp"
#include "coldqs/partition.hpp"
#include "coldqs/prompt.hpp"
#include "coldqs/reward.hpp"
#include "coldqs/sampler.hpp"

namespace coldqs::orchestrator {

namespace fs = std::filesystem;

namespace {

std::string round_dir(int iteration) { return "round_" + std::to_string(iteration); }

json prompt_json(const prompt::PromptText& p) {
    return json{{"system", p.system_text ? json(*p.system_text) : json(nullptr)}, {"user", p.user_text}};
}

void append(std::vector<Finding>& into, const std::vector<Finding>& more) {
    into.insert(into.end(), more.begin(), more.end());
}

// Every item of a non-empty batch failed: the endpoint is down, not flaky.
void require_some_success(const std::vector<gateway::Completion>& batch, const std::string& what) {
    if (batch.empty()) return;
    for (const auto& c : batch)
        if (c.ok()) return;
    throw TransportError(what + ": every request failed; last error: " + batch.back().error.value_or("?"),
                         batch.back().attempts);
}

json hook_params(std::string_view mode, int iteration, const EndpointRef& policy,
                 const json& hyperparams, const PipelineConfig& cfg) {
    json j{{"mode", mode},
           {"round", iteration},
           {"policy_endpoint", policy},
           {"hyperparams", hyperparams.is_object() && hyperparams.contains(mode) ? hyperparams[std::string(mode)]
                                                                                  : json::object()}};
    if (mode == "grpo") {
        j["group_size"] = cfg.orchestrator.rollouts_per_context;
        j["advantage_epsilon"] = cfg.reward.advantage_epsilon;
    }
    return j;
}

}  // namespace

Orchestrator::Orchestrator(PipelineConfig config, std::shared_ptr<const gateway::Backend> backend)
    : config_(std::move(config)), gateway_(std::move(backend)) {
    config_.validate();
}

fs::path Orchestrator::manifest_path() const { return config_.work_path() / "manifest.json"; }

void Orchestrator::persist(const PipelineManifest& m) const { save_manifest(manifest_path(), m); }

PipelineManifest Orchestrator::load_or_init(bool check_config) const {
    if (fs::exists(manifest_path())) {
        auto m = load_manifest(manifest_path());
        if (check_config && m.config_snapshot != config_.snapshot())
            throw ValidationError("configuration differs from the one recorded in " + manifest_path().string() +
                                  "; use a fresh work directory");
        return m;
    }
    PipelineManifest m;
    m.K = config_.orchestrator.iterations;
    m.policy_endpoint = config_.policy.ref();
    m.judge_endpoint = config_.judge.ref();
    m.config_snapshot = config_.snapshot();
    m.trainer_hyperparams = config_.orchestrator.trainer_hyperparams;
    m.ablations = json{{"no_uncertainty", config_.sampler.no_uncertainty},
                       {"mix_ratio", config_.orchestrator.mix_ratio},
                       {"skip_sft", config_.orchestrator.skip_sft},
                       {"accumulate_hard", config_.sampler.accumulate_hard}};
    return m;
}

DatasetPartition Orchestrator::load_input(PipelineManifest& m, PartitionName name) const {
    std::string rel;
    switch (name) {
        case PartitionName::click: rel = config_.data.click; break;
        case PartitionName::unclick: rel = config_.data.unclick; break;
        case PartitionName::test: rel = config_.data.test; break;
        default: throw PreconditionError("not an input partition: " + std::string(to_string(name)));
    }
    const std::string key(to_string(name));
    if (rel.empty()) throw ValidationError("data." + key + " is not configured");
    auto part = load_partition(config_.resolve(rel), name);
    auto findings = validate_partition(part);
    if (has_errors(findings)) {
        std::string msg = key + " partition is invalid:";
        std::size_t shown = 0;
        for (const auto& f : findings) {
            if (f.severity != Severity::error) continue;
            if (++shown > 5) break;
            msg += " [" + f.record_id + "] " + f.message + ";";
        }
        throw ValidationError(msg);
    }
    const auto digest = part.content_digest();
    if (auto it = m.partition_digests.find(key); it != m.partition_digests.end()) {
        if (it->second != digest)
            throw ValidationError(key + " partition changed since the manifest was written (digest " +
                                  digest + ", pinned " + it->second + ")");
    } else {
        m.partition_digests[key] = digest;
    }
    return part;
}

gateway::EndpointConfig Orchestrator::policy_endpoint(const PipelineManifest& m) const {
    auto e = config_.policy;
    e.base_url = m.policy_endpoint.base_url;
    e.model_name = m.policy_endpoint.model_name;
    return e;
}

DatasetPartition Orchestrator::current_hard(const PipelineManifest& m) const {
    DatasetPartition out;
    out.name = PartitionName::hard;
    std::unordered_set<std::string> seen;
    for (const auto& rel : m.hard_sets) {
        auto part = load_partition(config_.work_path() / rel, PartitionName::hard);
        for (auto& r : part.records)
            if (seen.insert(r.id()).second) out.records.push_back(std::move(r));
    }
    return out;
}

void Orchestrator::build_sft(PipelineManifest& m) const {
    if (m.stage != Stage::init) throw PreconditionError("SFT build runs only from a fresh manifest");
    const auto click = load_input(m, PartitionName::click);
    if (config_.orchestrator.skip_sft) {
        m.stage = Stage::sft_build;
        persist(m);
        return;
    }

    std::vector<SftPair> general;
    if (config_.orchestrator.mix_ratio > 0.0) {
        if (config_.data.general_corpus.empty())
            throw ValidationError("mix_ratio > 0 needs data.general_corpus");
        general = load_general_corpus(config_.resolve(config_.data.general_corpus));
        std::vector<std::string> lines;
        for (const auto& p : general) lines.push_back(canonical_dump(json(p)));
        const auto digest = digest_lines(lines);
        auto [it, fresh] = m.partition_digests.emplace("general_corpus", digest);
        if (!fresh && it->second != digest)
            throw ValidationError("general corpus changed since the manifest was written");
    }
    auto ds = build_sft_dataset(click, general, config_.orchestrator.mix_ratio,
                                derive_seed(config_.seed, "sft_mix"));

    const auto dir = config_.work_path() / "sft";
    fs::create_directories(dir);
    std::vector<json> rows;
    for (const auto& p : ds.pairs) rows.push_back(p);
    write_jsonl(dir / "sft_mix.jsonl", rows);
    write_file_atomic(dir / "hyperparams.json",
                      canonical_dump(hook_params("sft", 0, m.policy_endpoint, m.trainer_hyperparams, config_)) +
                          "\n");
    try {
        auto res = run_trainer_hook(config_.orchestrator.trainer_hook, dir / "sft_mix.jsonl",
                                    dir / "hyperparams.json", dir / "result.json");
        m.policy_endpoint = res.policy_endpoint;
    } catch (const TrainerHookError& e) {
        m.failures.push_back({"sft_build", 0, e.status(), e.what()});
        persist(m);
        throw;
    }
    m.partition_digests["sft_mix"] = ds.digest();
    append(m.findings, ds.findings);
    m.stage = Stage::sft_build;
    persist(m);
}

RoundRecord Orchestrator::run_rl_round(PipelineManifest& m, const DatasetPartition& train,
                                       int iteration) const {
    if (train.records.empty()) throw PreconditionError("RL round needs at least one training context");
    const int n = config_.orchestrator.rollouts_per_context;
    const int k = config_.orchestrator.k;
    const auto policy = policy_endpoint(m);
    const auto round_seed = derive_seed(config_.seed, "rollout/round/" + std::to_string(iteration));
    const auto& records = train.records;

    std::vector<gateway::ChatRequest> gen;
    gen.reserve(records.size() * static_cast<std::size_t>(n));
    for (const auto& r : records) {
        auto p = prompt::render_generation_prompt(r.context);
        for (int i = 0; i < n; ++i)
            gen.push_back({p, derive_seed(round_seed, r.id() + "#" + std::to_string(i))});
    }
    auto generations = gateway_.complete_batch(policy, gen, config_.parallelism);
    require_some_success(generations, "rollout generation");

    std::vector<SuggestionSet> sets(gen.size());
    std::vector<gateway::ChatRequest> judge_requests;
    std::vector<std::size_t> judged;
    for (std::size_t g = 0; g < gen.size(); ++g) {
        if (!generations[g].ok()) continue;
        const auto& rec = records[g / static_cast<std::size_t>(n)];
        sets[g] = prompt::parse_options(*generations[g].text, k, rec.id());
        if (sets[g].format_ok) {
            judge_requests.push_back({prompt::render_judge_prompt(rec.context, sets[g]), std::nullopt});
            judged.push_back(g);
        }
    }
    auto verdict_texts = gateway_.complete_batch(config_.judge, judge_requests, config_.parallelism);
    require_some_success(verdict_texts, "rollout judging");
    std::vector<const gateway::Completion*> verdict_for(gen.size(), nullptr);
    for (std::size_t j = 0; j < judged.size(); ++j) verdict_for[judged[j]] = &verdict_texts[j];

    RoundRecord round;
    round.iteration = iteration;
    round.policy_in = m.policy_endpoint;
    round.train_digest = train.content_digest();
    round.contexts = records.size();

    std::vector<Finding> findings;
    std::vector<json> rows;
    for (std::size_t c = 0; c < records.size(); ++c) {
        const auto& rec = records[c];
        const auto base = c * static_cast<std::size_t>(n);
        std::vector<SuggestionSet> group_sets;
        std::vector<std::optional<JudgeVerdict>> verdicts;
        std::string problem;
        for (std::size_t g = base; g < base + static_cast<std::size_t>(n) && problem.empty(); ++g) {
            if (!generations[g].ok()) {
                problem = "generation failed: " + *generations[g].error;
                break;
            }
            group_sets.push_back(sets[g]);
            if (!sets[g].format_ok) {
                verdicts.emplace_back();
                continue;
            }
            const auto* vc = verdict_for[g];
            if (!vc->ok()) {
                problem = "judging failed: " + *vc->error;
                break;
            }
            try {
                verdicts.push_back(prompt::parse_judge_output(*vc->text, k, rec.id()));
            } catch (const ParseError& e) {
                problem = std::string("judge output unusable: ") + e.what();
            }
        }
        if (!problem.empty()) {
            ++round.groups_skipped;
            findings.push_back({Severity::error, rec.id(), "round " + std::to_string(iteration) +
                                                               ": group skipped, " + problem});
            continue;
        }
        auto group = reward::score_rollout_group(rec.id(), group_sets, verdicts, config_.reward.advantage_epsilon);
        const bool degraded = std::any_of(group.rollouts.begin(), group.rollouts.end(),
                                          [](const ScoredRollout& s) { return s.degraded; });
        if (degraded && !config_.reward.include_degraded) {
            ++round.groups_skipped;
            findings.push_back({Severity::warning, rec.id(),
                                "round " + std::to_string(iteration) +
                                    ": group skipped, verdict reconstructed from counts"});
            continue;
        }
        const auto prompt_j = prompt_json(prompt::render_generation_prompt(rec.context));
        for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
            const auto& s = group.rollouts[i];
            rows.push_back(json{{"group_id", std::to_string(iteration) + "/" + rec.id()},
                                {"record_id", rec.id()},
                                {"rollout", i},
                                {"prompt", prompt_j},
                                {"candidates", s.suggestion_set.candidates},
                                {"raw_output", s.suggestion_set.raw_output},
                                {"format_ok", s.suggestion_set.format_ok},
                                {"r_q", s.reward.rollout_reward},
                                {"advantage", s.advantage.value_or(0.0)},
                                {"degraded", s.degraded}});
        }
        ++round.groups_exported;
    }
    if (round.groups_exported == 0)
        throw TransportError("round " + std::to_string(iteration) + ": no rollout group survived", 0);

    std::vector<std::string> lines;
    for (const auto& r : rows) lines.push_back(canonical_dump(r));
    round.export_digest = digest_lines(lines);

    const auto dir = config_.work_path() / round_dir(iteration);
    fs::create_directories(dir);
    write_jsonl(dir / "grpo_export.jsonl", rows);
    write_file_atomic(
        dir / "hyperparams.json",
        canonical_dump(hook_params("grpo", iteration, m.policy_endpoint, m.trainer_hyperparams, config_)) + "\n");
    try {
        auto res = run_trainer_hook(config_.orchestrator.trainer_hook, dir / "grpo_export.jsonl",
                                    dir / "hyperparams.json", dir / "result.json");
        round.policy_out = res.policy_endpoint;
    } catch (const TrainerHookError& e) {
        m.failures.push_back({"rl_round", iteration, e.status(), e.what()});
        persist(m);
        throw;
    }

    m.policy_endpoint = round.policy_out;
    m.iteration = iteration;
    m.stage = Stage::rl_round;
    append(m.findings, findings);
    std::erase_if(m.rounds, [&](const RoundRecord& r) { return r.iteration == iteration; });
    m.rounds.push_back(round);
    persist(m);
    return round;
}

void Orchestrator::sample(PipelineManifest& m, RoundRecord& round, int iteration) const {
    const auto click = load_input(m, PartitionName::click);
    const auto unclick = load_input(m, PartitionName::unclick);
    const auto dir = config_.work_path() / round_dir(iteration);
    fs::create_directories(dir);

    DatasetPartition hard;
    hard.name = PartitionName::hard;
    std::vector<Finding> findings;
    if (config_.sampler.no_uncertainty) {
        for (const auto& r : unclick.records) {
            PartitionRecord plain;
            plain.context = r.context;
            hard.records.push_back(std::move(plain));
        }
        round.pseudo_digest.clear();
    } else {
        sampler::PseudoLabelRequest req;
        req.gateway = &gateway_;
        req.policy = policy_endpoint(m);
        req.judge = config_.judge;
        req.k = config_.orchestrator.k;
        req.seed = derive_seed(config_.seed, "pseudo/round/" + std::to_string(iteration));
        req.parallelism = config_.parallelism;
        auto res = sampler::build_pseudo(req, unclick);
        if (!unclick.records.empty() && res.transport_failures == unclick.records.size())
            throw TransportError("pseudo-labeling: every request failed", 0);
        findings = std::move(res.findings);
        save_partition(dir / "pseudo.jsonl", res.pseudo);
        round.pseudo_digest = res.pseudo.content_digest();
        const std::size_t budget = config_.sampler.budget ? config_.sampler.budget : click.records.size();
        hard = sampler::select_hard(res.pseudo, budget, config_.sampler.min_u);
    }
    save_partition(dir / "hard.jsonl", hard);
    round.hard_digest = hard.content_digest();
    round.hard_size = hard.records.size();

    const auto rel = round_dir(iteration) + "/hard.jsonl";
    if (!config_.sampler.accumulate_hard) m.hard_sets.clear();
    m.hard_sets.push_back(rel);
    for (auto& r : m.rounds)
        if (r.iteration == iteration) r = round;
    append(m.findings, findings);
    m.iteration = iteration;
    m.stage = iteration == 0 ? Stage::sampling : Stage::iterate;
    persist(m);
}

PipelineManifest Orchestrator::iterate(PipelineManifest m, int K,
                                       const std::function<void(const PipelineManifest&)>& on_round) const {
    if (K < 1) throw ValidationError("K must be >= 1");
    ManifestLock lock(config_.work_path() / "manifest.lock");
    if (m.stage == Stage::done && m.K >= K) return m;
    if (m.stage != Stage::init && m.iteration > K)
        throw ValidationError("manifest already past iteration " + std::to_string(K));
    m.K = K;
    if (m.stage == Stage::done) m.stage = Stage::iterate;

    auto round_for = [&](int i) -> RoundRecord& {
        for (auto& r : m.rounds)
            if (r.iteration == i) return r;
        throw PreconditionError("manifest has no record of round " + std::to_string(i));
    };
    auto notify = [&] {
        if (on_round) on_round(m);
    };

    if (m.stage == Stage::init) build_sft(m);
    if (m.stage == Stage::sft_build) run_rl_round(m, load_input(m, PartitionName::click), 0);
    if (m.stage == Stage::rl_round && m.iteration == 0) {
        RoundRecord r = round_for(0);
        sample(m, r, 0);
        notify();
    }
    if (m.stage == Stage::rl_round) {
        const int i = m.iteration;
        RoundRecord r = round_for(i);
        sample(m, r, i);
        notify();
    }
    while (m.iteration < K) {
        const int i = m.iteration + 1;
        const auto train = merge_training_contexts(load_input(m, PartitionName::click), current_hard(m));
        RoundRecord r = run_rl_round(m, train, i);
        sample(m, r, i);
        notify();
    }
    m.stage = Stage::done;
    persist(m);
    return m;
}

PredictionResult Orchestrator::predict_testset(const PipelineManifest& m, const DatasetPartition& test,
                                               std::uint64_t seed,
                                               const std::optional<gateway::EndpointConfig>& endpoint_override) const {
    if (!endpoint_override && m.stage != Stage::done)
        throw PreconditionError("prediction needs a finished pipeline (stage is " +
                                std::string(to_string(m.stage)) + ")");
    const auto endpoint = endpoint_override ? *endpoint_override : policy_endpoint(m);
    const int k = config_.orchestrator.k;

    std::vector<gateway::ChatRequest> reqs;
    for (const auto& r : test.records)
        reqs.push_back({prompt::render_generation_prompt(r.context), derive_seed(seed, r.id())});
    auto outs = gateway_.complete_batch(endpoint, reqs, config_.parallelism);

    PredictionResult res;
    for (std::size_t i = 0; i < outs.size(); ++i) {
        const auto& id = test.records[i].id();
        if (outs[i].ok()) {
            res.outputs.push_back(prompt::parse_options(*outs[i].text, k, id));
            continue;
        }
        SuggestionSet failed;
        failed.context_ref = id;
        failed.k = k;
        failed.format_ok = false;
        failed.warnings.push_back("transport_error: " + *outs[i].error);
        res.outputs.push_back(std::move(failed));
        res.findings.push_back({Severity::error, id, "generation failed: " + *outs[i].error});
    }
    return res;
}

json Orchestrator::plan(const PipelineManifest& m, int K) const {
    json steps = json::array();
    auto add = [&](std::string stage, int iteration, std::string detail) {
        steps.push_back({{"stage", std::move(stage)}, {"iteration", iteration}, {"detail", std::move(detail)}});
    };
    const int n = config_.orchestrator.rollouts_per_context;
    const auto sampling = config_.sampler.no_uncertainty ? std::string("hard set = all unclicked contexts")
                                                         : std::string("pseudo-label unclicked, select by uncertainty");
    Stage s = m.stage;
    int it = m.iteration;
    if (s == Stage::done && m.K >= K) return json{{"stage", to_string(s)}, {"steps", steps}};
    if (s == Stage::init) {
        add("sft_build", 0, config_.orchestrator.skip_sft
                                ? std::string("skipped")
                                : "click + general mix (ratio " + canonical_dump(config_.orchestrator.mix_ratio) + ")");
        s = Stage::sft_build;
    }
    if (s == Stage::sft_build) {
        add("rl_round", 0, "click contexts, " + std::to_string(n) + " rollouts each");
        s = Stage::rl_round;
        it = 0;
    }
    if (s == Stage::rl_round) {
        add("sampling", it, sampling);
        s = Stage::sampling;
    }
    for (int i = it + 1; i <= K; ++i) {
        add("rl_round", i, "click + hard contexts, " + std::to_string(n) + " rollouts each");
        add("sampling", i, sampling);
    }
    return json{{"stage", to_string(m.stage)}, {"iteration", m.iteration}, {"K", K}, {"steps", steps}};
}

std::shared_ptr<const gateway::Backend> make_backend(const PipelineConfig& config) {
    if (config.backend == BackendKind::mock) return std::make_shared<gateway::MockBackend>(config.mock);
    return std::make_shared<gateway::HttpBackend>();
}

}  // namespace coldqs::orchestrator
