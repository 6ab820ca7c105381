#include "coldqs/config.hpp"

#include "coldqs/canonical.hpp"
#include "coldqs/errors.hpp"

namespace coldqs {

namespace {

gateway::EndpointConfig default_endpoint(std::string model) {
    gateway::EndpointConfig e;
    e.base_url = "http://localhost:8000/v1";
    e.model_name = std::move(model);
    e.api_key_env = "COLDQS_API_KEY";
    return e;
}

}  // namespace

json default_trainer_hyperparams() {
    return json{
        {"sft",
         {{"max_sequence_length", 4096},
          {"effective_batch_size", 256},
          {"learning_rate", 1e-4},
          {"precision", "bf16"},
          {"epochs", 3},
          {"full_parameter", true}}},
        {"grpo",
         {{"batch_size", 256},
          {"max_prompt_length", 2048},
          {"max_response_length", 512},
          {"actor_learning_rate", 1e-6},
          {"kl_loss_coefficient", 0.001},
          {"rollout_engine", "vllm"}}},
    };
}

std::filesystem::path PipelineConfig::resolve(const std::string& p) const {
    std::filesystem::path path(p);
    if (path.is_absolute() || base_dir.empty()) return path;
    return base_dir / path;
}

json PipelineConfig::to_json() const {
    return json{
        {"seed", seed},
        {"work_dir", work_dir},
        {"data",
         {{"click", data.click},
          {"unclick", data.unclick},
          {"test", data.test},
          {"general_corpus", data.general_corpus}}},
        {"backend", backend == BackendKind::mock ? "mock" : "http"},
        {"mock", mock},
        {"endpoints", {{"policy", policy}, {"judge", judge}, {"eval_judge", eval_judge}}},
        {"reward",
         {{"advantage_epsilon", reward.advantage_epsilon},
          {"include_degraded", reward.include_degraded}}},
        {"sampler",
         {{"budget", sampler.budget},
          {"min_u", sampler.min_u},
          {"accumulate_hard", sampler.accumulate_hard},
          {"no_uncertainty", sampler.no_uncertainty}}},
        {"orchestrator",
         {{"iterations", orchestrator.iterations},
          {"rollouts_per_context", orchestrator.rollouts_per_context},
          {"k", orchestrator.k},
          {"mix_ratio", orchestrator.mix_ratio},
          {"skip_sft", orchestrator.skip_sft},
          {"trainer_hook", orchestrator.trainer_hook},
          {"trainer_hyperparams", orchestrator.trainer_hyperparams}}},
        {"eval", {{"repeats", eval.repeats}}},
        {"runtime", {{"parallelism", parallelism}}},
    };
}

json PipelineConfig::snapshot() const {
    auto j = to_json();
    j.erase("work_dir");
    j.erase("runtime");
    j.erase("eval");
    // K lives in the manifest; raising it extends a finished run.
    j["orchestrator"].erase("iterations");
    return j;
}

void PipelineConfig::validate() const {
    policy.validate();
    judge.validate();
    eval_judge.validate();
    if (orchestrator.iterations < 1) throw ValidationError("orchestrator.iterations must be > 0");
    if (orchestrator.rollouts_per_context < 2)
        throw ValidationError("orchestrator.rollouts_per_context must be >= 2");
    if (orchestrator.k < 1) throw ValidationError("orchestrator.k must be >= 1");
    if (!(orchestrator.mix_ratio >= 0.0)) throw ValidationError("orchestrator.mix_ratio must be >= 0");
    if (sampler.min_u < 0.0) throw ValidationError("sampler.min_u must be >= 0");
    if (!(reward.advantage_epsilon > 0.0))
        throw ValidationError("reward.advantage_epsilon must be > 0");
    if (eval.repeats < 1) throw ValidationError("eval.repeats must be >= 1");
    if (parallelism < 1) throw ValidationError("runtime.parallelism must be >= 1");
    if (mock.options_count < 1) throw ValidationError("mock.options_count must be >= 1");
}

PipelineConfig config_from_json(const json& j, std::filesystem::path base_dir) {
    PipelineConfig c;
    c.base_dir = std::move(base_dir);
    c.policy = default_endpoint("policy");
    c.judge = default_endpoint("judge");
    c.eval_judge = default_endpoint("eval-judge");
    c.orchestrator.trainer_hyperparams = default_trainer_hyperparams();
    try {
        c.seed = j.value("seed", c.seed);
        c.work_dir = j.value("work_dir", c.work_dir);
        if (auto d = j.find("data"); d != j.end()) {
            c.data.click = d->value("click", "");
            c.data.unclick = d->value("unclick", "");
            c.data.test = d->value("test", "");
            c.data.general_corpus = d->value("general_corpus", "");
        }
        if (auto b = j.find("backend"); b != j.end()) {
            auto s = b->get<std::string>();
            if (s == "mock") c.backend = BackendKind::mock;
            else if (s == "http") c.backend = BackendKind::http;
            else throw ValidationError("backend must be \"mock\" or \"http\"");
        }
        if (auto m = j.find("mock"); m != j.end()) c.mock = m->get<gateway::MockOptions>();
        if (auto e = j.find("endpoints"); e != j.end()) {
            if (e->contains("policy")) c.policy = e->at("policy").get<gateway::EndpointConfig>();
            if (e->contains("judge")) c.judge = e->at("judge").get<gateway::EndpointConfig>();
            if (e->contains("eval_judge"))
                c.eval_judge = e->at("eval_judge").get<gateway::EndpointConfig>();
        }
        if (auto r = j.find("reward"); r != j.end()) {
            c.reward.advantage_epsilon = r->value("advantage_epsilon", c.reward.advantage_epsilon);
            c.reward.include_degraded = r->value("include_degraded", c.reward.include_degraded);
        }
        if (auto s = j.find("sampler"); s != j.end()) {
            c.sampler.budget = s->value("budget", c.sampler.budget);
            c.sampler.min_u = s->value("min_u", c.sampler.min_u);
            c.sampler.accumulate_hard = s->value("accumulate_hard", c.sampler.accumulate_hard);
            c.sampler.no_uncertainty = s->value("no_uncertainty", c.sampler.no_uncertainty);
        }
        if (auto o = j.find("orchestrator"); o != j.end()) {
            auto& oc = c.orchestrator;
            oc.iterations = o->value("iterations", oc.iterations);
            oc.rollouts_per_context = o->value("rollouts_per_context", oc.rollouts_per_context);
            oc.k = o->value("k", oc.k);
            oc.mix_ratio = o->value("mix_ratio", oc.mix_ratio);
            oc.skip_sft = o->value("skip_sft", oc.skip_sft);
            oc.trainer_hook = o->value("trainer_hook", oc.trainer_hook);
            if (auto h = o->find("trainer_hyperparams"); h != o->end()) oc.trainer_hyperparams = *h;
        }
        if (auto e = j.find("eval"); e != j.end()) c.eval.repeats = e->value("repeats", c.eval.repeats);
        if (auto r = j.find("runtime"); r != j.end())
            c.parallelism = r->value("parallelism", c.parallelism);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    auto text = read_file(path);
    auto j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw ValidationError(path.string() + ": config is not a JSON object");
    auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    return config_from_json(j, base);
}

}  // namespace coldqs
