// coldqs: command-line front end for the cold-start query-suggestion pipeline.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "coldqs/canonical.hpp"
#include "coldqs/config.hpp"
#include "coldqs/engagement.hpp"
#include "coldqs/errors.hpp"
#include "coldqs/eval.hpp"
#include "coldqs/orchestrator.hpp"
#include "coldqs/partition.hpp"
#include "coldqs/synthetic.hpp"

namespace fs = std::filesystem;
using namespace coldqs;
using orchestrator::Orchestrator;
using orchestrator::PipelineManifest;
using orchestrator::Stage;

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> parallelism;
    std::optional<int> iterations;
    std::optional<double> mix_ratio;
    bool mock = false;
    bool no_uncertainty = false;
    bool dry_run = false;
    bool verbose = false;
};

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

void progress(const Overrides& o, const std::string& line) {
    if (o.verbose) std::cerr << "coldqs: " << line << "\n";
}

PipelineConfig effective_config(const Overrides& o) {
    if (o.config.empty()) throw ValidationError("--config is required");
    auto cfg = load_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (o.parallelism) cfg.parallelism = *o.parallelism;
    if (o.iterations) cfg.orchestrator.iterations = *o.iterations;
    if (o.mix_ratio) cfg.orchestrator.mix_ratio = *o.mix_ratio;
    if (o.mock) cfg.backend = BackendKind::mock;
    if (o.no_uncertainty) cfg.sampler.no_uncertainty = true;
    cfg.validate();
    return cfg;
}

json endpoints_json(const PipelineConfig& cfg, const PipelineManifest& m) {
    return json{{"backend", cfg.backend == BackendKind::mock ? "mock" : "http"},
                {"policy", m.policy_endpoint},
                {"judge", cfg.judge.ref()},
                {"eval_judge", cfg.eval_judge.ref()}};
}

json dry_run_plan(const Orchestrator& orch, const PipelineManifest& m) {
    const auto& cfg = orch.config();
    return json{{"dry_run", true},
                {"work_dir", cfg.work_path().string()},
                {"partitions",
                 {{"click", cfg.data.click},
                  {"unclick", cfg.data.unclick},
                  {"test", cfg.data.test},
                  {"general_corpus", cfg.data.general_corpus}}},
                {"endpoints", endpoints_json(cfg, m)},
                {"plan", orch.plan(m, cfg.orchestrator.iterations)}};
}

json round_summary(const orchestrator::RoundRecord& r) {
    return json{{"iteration", r.iteration},
                {"contexts", r.contexts},
                {"groups_exported", r.groups_exported},
                {"groups_skipped", r.groups_skipped},
                {"hard_size", r.hard_size},
                {"policy_out", r.policy_out}};
}

json manifest_summary(const PipelineManifest& m, const fs::path& path) {
    json rounds = json::array();
    for (const auto& r : m.rounds) rounds.push_back(round_summary(r));
    std::size_t errors = 0;
    for (const auto& f : m.findings) errors += f.severity == Severity::error;
    return json{{"manifest", path.string()},
                {"digest", m.digest()},
                {"stage", orchestrator::to_string(m.stage)},
                {"iteration", m.iteration},
                {"K", m.K},
                {"policy_endpoint", m.policy_endpoint},
                {"partition_digests", m.partition_digests},
                {"ablations", m.ablations},
                {"rounds", rounds},
                {"failures", m.failures.size()},
                {"findings", m.findings.size()},
                {"finding_errors", errors}};
}

int cmd_validate(const Overrides& o, const std::string& partition, const std::string& name) {
    json report = json::object();
    bool ok = true;
    auto check = [&](const fs::path& path, PartitionName pn) {
        auto part = load_partition(path, pn);
        auto findings = validate_partition(part);
        ok = ok && !has_errors(findings);
        report[std::string(to_string(pn))] = json{{"path", path.string()},
                                                 {"records", part.records.size()},
                                                 {"digest", part.content_digest()},
                                                 {"findings", findings}};
    };
    if (!partition.empty()) {
        check(partition, parse_partition_name(name));
    } else {
        const auto cfg = effective_config(o);
        if (!cfg.data.click.empty()) check(cfg.resolve(cfg.data.click), PartitionName::click);
        if (!cfg.data.unclick.empty()) check(cfg.resolve(cfg.data.unclick), PartitionName::unclick);
        if (!cfg.data.test.empty()) check(cfg.resolve(cfg.data.test), PartitionName::test);
        if (!cfg.data.general_corpus.empty()) {
            auto general = orchestrator::load_general_corpus(cfg.resolve(cfg.data.general_corpus));
            report["general_corpus"] = json{{"pairs", general.size()}};
        }
    }
    print(json{{"ok", ok}, {"partitions", report}});
    return ok ? 0 : static_cast<int>(ExitCode::validation);
}

int cmd_stage(const Overrides& o, const std::string& which) {
    const auto cfg = effective_config(o);
    Orchestrator orch(cfg, orchestrator::make_backend(cfg));
    auto m = orch.load_or_init(!o.dry_run);
    if (o.dry_run) {
        print(dry_run_plan(orch, m));
        return 0;
    }
    orchestrator::ManifestLock lock(cfg.work_path() / "manifest.lock");
    if (which == "sft-build") {
        if (m.stage != Stage::init) throw PreconditionError("SFT stage already complete");
        orch.build_sft(m);
    } else if (which == "rl-round") {
        if (m.stage == Stage::sft_build) {
            progress(o, "rl round 0 (click only)");
            orch.run_rl_round(m, orch.load_input(m, PartitionName::click), 0);
        } else if (m.stage == Stage::sampling || m.stage == Stage::iterate) {
            const int i = m.iteration + 1;
            if (i > m.K) throw PreconditionError("all " + std::to_string(m.K) + " rounds are done");
            DatasetPartition hard;
            for (const auto& rel : m.hard_sets) {
                auto part = load_partition(cfg.work_path() / rel, PartitionName::hard);
                hard.records.insert(hard.records.end(), part.records.begin(), part.records.end());
            }
            progress(o, "rl round " + std::to_string(i));
            orch.run_rl_round(m, orchestrator::merge_training_contexts(orch.load_input(m, PartitionName::click), hard), i);
        } else {
            throw PreconditionError("rl-round cannot run at stage " + std::string(orchestrator::to_string(m.stage)));
        }
    } else if (which == "sample") {
        if (m.stage != Stage::rl_round)
            throw PreconditionError("sample needs a finished rl round (stage is " +
                                    std::string(orchestrator::to_string(m.stage)) + ")");
        auto round = m.rounds.back();
        orch.sample(m, round, m.iteration);
        if (m.iteration >= m.K) {
            m.stage = Stage::done;
            save_manifest(orch.manifest_path(), m);
        }
    }
    print(manifest_summary(m, orch.manifest_path()));
    return 0;
}

int cmd_iterate(const Overrides& o) {
    const auto cfg = effective_config(o);
    Orchestrator orch(cfg, orchestrator::make_backend(cfg));
    auto m = orch.load_or_init(!o.dry_run);
    if (o.dry_run) {
        print(dry_run_plan(orch, m));
        return 0;
    }
    m = orch.iterate(std::move(m), cfg.orchestrator.iterations, [&](const PipelineManifest& mm) {
        const auto& r = mm.rounds.back();
        progress(o, "round " + std::to_string(r.iteration) + ": " + std::to_string(r.groups_exported) +
                        " groups exported, hard set " + std::to_string(r.hard_size));
    });
    print(manifest_summary(m, orch.manifest_path()));
    return 0;
}

std::optional<gateway::EndpointConfig> baseline_override(const PipelineConfig& cfg, bool baseline) {
    if (!baseline) return std::nullopt;
    return cfg.policy;
}

int cmd_predict(const Overrides& o, std::string out, bool baseline) {
    const auto cfg = effective_config(o);
    Orchestrator orch(cfg, orchestrator::make_backend(cfg));
    auto m = orch.load_or_init(!o.dry_run);
    if (o.dry_run) {
        print(dry_run_plan(orch, m));
        return 0;
    }
    orchestrator::ManifestLock lock(cfg.work_path() / "manifest.lock");
    const auto test = orch.load_input(m, PartitionName::test);
    save_manifest(orch.manifest_path(), m);
    auto res = orch.predict_testset(m, test, derive_seed(cfg.seed, "predict"), baseline_override(cfg, baseline));
    if (out.empty()) out = (cfg.work_path() / (baseline ? "predictions_baseline.jsonl" : "predictions.jsonl")).string();
    std::vector<json> rows;
    std::vector<std::string> lines;
    std::size_t ok = 0;
    for (const auto& s : res.outputs) {
        rows.push_back(s);
        lines.push_back(canonical_dump(rows.back()));
        ok += s.format_ok;
    }
    write_jsonl(out, rows);
    print(json{{"predictions", out},
               {"count", res.outputs.size()},
               {"format_ok", ok},
               {"digest", digest_lines(lines)},
               {"findings", res.findings}});
    return 0;
}

int cmd_eval(const Overrides& o, int repeats, bool baseline, const std::string& predictions) {
    auto cfg = effective_config(o);
    if (repeats > 0) cfg.eval.repeats = repeats;
    Orchestrator orch(cfg, orchestrator::make_backend(cfg));
    auto m = orch.load_or_init(!o.dry_run);
    if (o.dry_run) {
        print(dry_run_plan(orch, m));
        return 0;
    }
    const auto test = orch.load_input(m, PartitionName::test);
    std::vector<Finding> findings;
    std::map<Intent, eval::IntentBucket> intents;
    std::size_t unjudged = 0;

    auto judge_run = [&](const std::vector<SuggestionSet>& outputs, bool keep_intents) {
        auto judged = eval::judge_outputs(orch.gateway(), cfg.eval_judge, test, outputs, cfg.parallelism);
        findings.insert(findings.end(), judged.findings.begin(), judged.findings.end());
        if (judged.verdicts.empty()) throw TransportError("evaluation: no output could be judged", 0);
        if (keep_intents) intents = eval::intent_breakdown(judged.verdicts, test);
        unjudged += judged.unjudged;
        return eval::summarize(judged.verdicts).as_map();
    };

    std::map<std::string, eval::MeanStd> table;
    json repeat_seeds = json::array();
    if (!predictions.empty()) {
        std::vector<SuggestionSet> outputs;
        for (const auto& row : read_jsonl(predictions)) outputs.push_back(row.get<SuggestionSet>());
        table = eval::repeated_runs([&](int) { return judge_run(outputs, true); }, 1);
    } else {
        table = eval::repeated_runs(
            [&](int r) {
                progress(o, "eval repeat " + std::to_string(r));
                const auto seed = derive_seed(cfg.seed, "eval/repeat/" + std::to_string(r));
                repeat_seeds.push_back(seed);
                auto res = orch.predict_testset(m, test, seed, baseline_override(cfg, baseline));
                findings.insert(findings.end(), res.findings.begin(), res.findings.end());
                return judge_run(res.outputs, r == 0);
            },
            cfg.eval.repeats);
    }

    json metrics = json::object();
    for (const auto& [name, ms] : table)
        metrics[name] = ms.std ? json{{"mean", ms.mean}, {"std", *ms.std}} : json{{"mean", ms.mean}, {"std", nullptr}};
    json by_intent = json::object();
    for (const auto& [intent, b] : intents)
        by_intent[std::string(to_string(intent))] =
            json{{"queries", b.queries}, {"strict_accuracy", b.strict_accuracy}, {"valid_rate", b.valid_rate}};
    json report{{"model", baseline ? cfg.policy.ref() : m.policy_endpoint},
                {"judge", cfg.eval_judge.ref()},
                {"repeats", predictions.empty() ? cfg.eval.repeats : 1},
                {"repeat_seeds", repeat_seeds},
                {"std", "sample (n-1); null for a single repeat"},
                {"config_digest", sha256_hex(canonical_dump(cfg.snapshot()))},
                {"test_records", test.records.size()},
                {"unjudged", unjudged},
                {"metrics", metrics},
                {"by_intent", by_intent},
                {"table", eval::render_table(table)},
                {"findings", findings}};
    fs::create_directories(cfg.work_path() / "eval");
    write_file_atomic(cfg.work_path() / "eval" / (baseline ? "report_baseline.json" : "report.json"),
                      report.dump(2) + "\n");
    print(report);
    return 0;
}

int cmd_metrics(const std::string& log, std::optional<std::int64_t> start, std::optional<std::int64_t> end) {
    const auto events = engagement::load_events(log);
    const auto window = engagement::filter_window(events, start, end);
    auto report = to_json(engagement::arm_report(window));
    report["events_in_window"] = window.size();
    report["events_total"] = events.size();
    print(report);
    return 0;
}

int cmd_report(const Overrides& o) {
    const auto cfg = effective_config(o);
    Orchestrator orch(cfg, orchestrator::make_backend(cfg));
    if (!fs::exists(orch.manifest_path()))
        throw ValidationError("no manifest at " + orch.manifest_path().string());
    auto m = orchestrator::load_manifest(orch.manifest_path());
    auto j = manifest_summary(m, orch.manifest_path());
    for (const char* name : {"report.json", "report_baseline.json"}) {
        const auto p = cfg.work_path() / "eval" / name;
        if (fs::exists(p)) j[std::string("eval_") + (name[6] == 'b' ? "baseline" : "policy")] = json::parse(read_file(p))["metrics"];
    }
    print(j);
    return 0;
}

int cmd_demo_data(const std::string& out, const synthetic::DatasetShape& shape, bool events) {
    const auto cfg = synthetic::write_dataset(out, synthetic::make_dataset(shape));
    json j{{"config", cfg.string()}};
    if (events) {
        std::vector<json> rows;
        for (const auto& e : synthetic::make_events({})) rows.push_back(e);
        write_jsonl(fs::path(out) / "events.jsonl", rows);
        j["events"] = (fs::path(out) / "events.jsonl").string();
    }
    print(j);
    return 0;
}

int report_error(const char* kind, const std::string& message, int code) {
    std::cerr << json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}}.dump() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cold-start query-suggestion pipeline: SFT, reward-driven RL rounds, uncertainty sampling, evaluation"};
    app.require_subcommand(1);
    Overrides o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "Pipeline config (JSON)");
        sub->add_option("--seed", o.seed, "Top-level seed");
        sub->add_option("--parallelism", o.parallelism, "Concurrent requests per batch");
        sub->add_option("--k", o.iterations, "Loop iterations K");
        sub->add_option("--mix-ratio", o.mix_ratio, "general:domain ratio of the SFT mix");
        sub->add_flag("--mock", o.mock, "Force the mock backend");
        sub->add_flag("--no-uncertainty", o.no_uncertainty, "Ablation: hard set = all unclicked contexts");
        sub->add_flag("--dry-run", o.dry_run, "Print the resolved plan and exit");
        sub->add_flag("-v,--verbose", o.verbose, "Progress on stderr");
    };

    std::string partition, partition_name = "click";
    auto* validate = app.add_subcommand("validate", "Check the config and input partitions");
    common(validate);
    validate->add_option("--partition", partition, "Check a single partition file instead");
    validate->add_option("--name", partition_name, "Partition name for --partition");

    auto* sft = app.add_subcommand("sft-build", "Build the SFT mix and run the trainer hook");
    common(sft);
    auto* rl = app.add_subcommand("rl-round", "Run the next reinforcement-learning round");
    common(rl);
    auto* sample = app.add_subcommand("sample", "Pseudo-label unclicked data and select the hard set");
    common(sample);
    auto* iterate = app.add_subcommand("iterate", "Run every remaining stage through K rounds");
    common(iterate);

    std::string out;
    bool baseline = false;
    auto* predict = app.add_subcommand("predict", "Generate suggestions for the test partition");
    common(predict);
    predict->add_option("--out", out, "Output JSONL (default <work_dir>/predictions.jsonl)");
    predict->add_flag("--baseline", baseline, "Use the configured initial policy endpoint");

    int repeats = 0;
    std::string predictions;
    auto* evalc = app.add_subcommand("eval", "Judge test-set suggestions; mean and std over repeats");
    common(evalc);
    evalc->add_option("--repeats", repeats, "Prediction repeats (default from config)");
    evalc->add_flag("--baseline", baseline, "Evaluate the initial policy endpoint");
    evalc->add_option("--predictions", predictions, "Judge an existing predictions file once");

    std::string log;
    std::optional<std::int64_t> start, end;
    auto* metrics = app.add_subcommand("metrics", "ChatUV / ChatPV and growth gap from an event log");
    metrics->add_option("--log", log, "Event log (JSONL)")->required();
    metrics->add_option("--start", start, "Window start, inclusive (epoch seconds)");
    metrics->add_option("--end", end, "Window end, exclusive (epoch seconds)");

    auto* report = app.add_subcommand("report", "Summarize the manifest and evaluation reports");
    common(report);

    auto* init_config = app.add_subcommand("init-config", "Print a config with every default spelled out");

    std::string demo_out = "demo";
    synthetic::DatasetShape shape;
    bool demo_events = false;
    auto* demo = app.add_subcommand("demo-data", "Write a synthetic dataset and mock config");
    demo->add_option("--out", demo_out, "Output directory");
    demo->add_option("--click", shape.click);
    demo->add_option("--unclick", shape.unclick);
    demo->add_option("--test", shape.test);
    demo->add_option("--general", shape.general);
    demo->add_option("--seed", shape.seed);
    demo->add_flag("--events", demo_events, "Also write a synthetic engagement log");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::validation);
    }

    try {
        if (*validate) return cmd_validate(o, partition, partition_name);
        if (*sft) return cmd_stage(o, "sft-build");
        if (*rl) return cmd_stage(o, "rl-round");
        if (*sample) return cmd_stage(o, "sample");
        if (*iterate) return cmd_iterate(o);
        if (*predict) return cmd_predict(o, out, baseline);
        if (*evalc) return cmd_eval(o, repeats, baseline, predictions);
        if (*metrics) return cmd_metrics(log, start, end);
        if (*report) return cmd_report(o);
        if (*init_config) {
            print(config_from_json(json::object()).to_json());
            return 0;
        }
        if (*demo) return cmd_demo_data(demo_out, shape, demo_events);
    } catch (const Error& e) {
        return report_error(e.kind(), e.what(), static_cast<int>(e.exit_code()));
    } catch (const json::exception& e) {
        return report_error("validation", e.what(), static_cast<int>(ExitCode::validation));
    } catch (const std::filesystem::filesystem_error& e) {
        return report_error("validation", e.what(), static_cast<int>(ExitCode::validation));
    }
    return 0;
}
