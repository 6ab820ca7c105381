#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <unordered_set>

#include "coldqs/canonical.hpp"
#include "coldqs/errors.hpp"
#include "coldqs/orchestrator.hpp"
#include "coldqs/prompt.hpp"

extern char** environ;

namespace coldqs::orchestrator {

namespace {

constexpr std::array<std::pair<Stage, std::string_view>, 6> kStages{{
    {Stage::init, "init"},
    {Stage::sft_build, "sft_build"},
    {Stage::rl_round, "rl_round"},
    {Stage::sampling, "sampling"},
    {Stage::iterate, "iterate"},
    {Stage::done, "done"},
}};

json round_to_json(const RoundRecord& r) {
    return json{{"iteration", r.iteration},
                {"policy_in", r.policy_in},
                {"policy_out", r.policy_out},
                {"train_digest", r.train_digest},
                {"export_digest", r.export_digest},
                {"contexts", r.contexts},
                {"groups_exported", r.groups_exported},
                {"groups_skipped", r.groups_skipped},
                {"pseudo_digest", r.pseudo_digest},
                {"hard_digest", r.hard_digest},
                {"hard_size", r.hard_size}};
}

RoundRecord round_from_json(const json& j) {
    RoundRecord r;
    r.iteration = j.at("iteration").get<int>();
    r.policy_in = j.at("policy_in").get<EndpointRef>();
    r.policy_out = j.at("policy_out").get<EndpointRef>();
    r.train_digest = j.at("train_digest").get<std::string>();
    r.export_digest = j.at("export_digest").get<std::string>();
    r.contexts = j.at("contexts").get<std::size_t>();
    r.groups_exported = j.at("groups_exported").get<std::size_t>();
    r.groups_skipped = j.at("groups_skipped").get<std::size_t>();
    r.pseudo_digest = j.at("pseudo_digest").get<std::string>();
    r.hard_digest = j.at("hard_digest").get<std::string>();
    r.hard_size = j.at("hard_size").get<std::size_t>();
    return r;
}

}  // namespace

std::string_view to_string(Stage s) {
    for (const auto& [v, n] : kStages)
        if (v == s) return n;
    return "?";
}

Stage parse_stage(std::string_view s) {
    for (const auto& [v, n] : kStages)
        if (n == s) return v;
    throw ValidationError("unknown stage '" + std::string(s) + "'");
}

json PipelineManifest::to_json() const {
    json failures_j = json::array();
    for (const auto& f : failures)
        failures_j.push_back(
            {{"stage", f.stage}, {"iteration", f.iteration}, {"status", f.status}, {"message", f.message}});
    json rounds_j = json::array();
    for (const auto& r : rounds) rounds_j.push_back(round_to_json(r));
    return json{{"stage", to_string(stage)},
                {"iteration", iteration},
                {"K", K},
                {"policy_endpoint", policy_endpoint},
                {"judge_endpoint", judge_endpoint},
                {"partition_digests", partition_digests},
                {"config_snapshot", config_snapshot},
                {"trainer_hyperparams", trainer_hyperparams},
                {"ablations", ablations},
                {"rounds", std::move(rounds_j)},
                {"hard_sets", hard_sets},
                {"failures", std::move(failures_j)},
                {"findings", findings}};
}

PipelineManifest PipelineManifest::from_json(const json& j) {
    PipelineManifest m;
    try {
        m.stage = parse_stage(j.at("stage").get<std::string>());
        m.iteration = j.at("iteration").get<int>();
        m.K = j.at("K").get<int>();
        m.policy_endpoint = j.at("policy_endpoint").get<EndpointRef>();
        m.judge_endpoint = j.at("judge_endpoint").get<EndpointRef>();
        m.partition_digests = j.at("partition_digests").get<std::map<std::string, std::string>>();
        m.config_snapshot = j.at("config_snapshot");
        m.trainer_hyperparams = j.at("trainer_hyperparams");
        m.ablations = j.at("ablations");
        for (const auto& r : j.at("rounds")) m.rounds.push_back(round_from_json(r));
        m.hard_sets = j.at("hard_sets").get<std::vector<std::string>>();
        for (const auto& f : j.at("failures"))
            m.failures.push_back({f.at("stage").get<std::string>(), f.at("iteration").get<int>(),
                                  f.at("status").get<int>(), f.at("message").get<std::string>()});
        m.findings = j.at("findings").get<std::vector<Finding>>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("manifest: ") + e.what());
    }
    return m;
}

std::string PipelineManifest::digest() const { return sha256_hex(canonical_dump(to_json())); }

PipelineManifest load_manifest(const std::filesystem::path& path) {
    auto j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw ValidationError(path.string() + ": manifest is not JSON");
    return PipelineManifest::from_json(j);
}

void save_manifest(const std::filesystem::path& path, const PipelineManifest& m) {
    write_file_atomic(path, canonical_dump(m.to_json()) + "\n");
}

ManifestLock::ManifestLock(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    for (int tries = 0; tries < 2; ++tries) {
        int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd >= 0) {
            auto pid = std::to_string(::getpid()) + "\n";
            [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
            ::close(fd);
            return;
        }
        if (errno != EEXIST) throw ValidationError("cannot create lock " + path_.string() + ": " + std::strerror(errno));
        std::string holder;
        try {
            holder = read_file(path_);
        } catch (const ValidationError&) {
            continue;
        }
        const long pid = std::strtol(holder.c_str(), nullptr, 10);
        const bool alive = pid > 0 && (::kill(static_cast<pid_t>(pid), 0) == 0 || errno == EPERM);
        if (alive)
            throw ValidationError("work directory is locked by running process " + std::to_string(pid) +
                                  " (" + path_.string() + ")");
        std::filesystem::remove(path_);
    }
    throw ValidationError("could not acquire lock " + path_.string());
}

ManifestLock::~ManifestLock() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
}

void to_json(json& j, const SftPair& v) {
    j = json{{"id", v.id}, {"source", v.source}, {"prompt", v.prompt}, {"completion", v.completion}};
    if (v.system) j["system"] = *v.system;
}

void from_json(const json& j, SftPair& v) {
    v = SftPair{};
    v.id = j.at("id").get<std::string>();
    v.source = j.value("source", std::string("general"));
    v.prompt = j.at("prompt").get<std::string>();
    v.completion = j.at("completion").get<std::string>();
    if (auto it = j.find("system"); it != j.end() && !it->is_null()) v.system = it->get<std::string>();
}

std::vector<SftPair> load_general_corpus(const std::filesystem::path& path) {
    std::vector<SftPair> out;
    std::unordered_set<std::string> ids;
    for (const auto& row : read_jsonl(path)) {
        try {
            auto p = row.get<SftPair>();
            p.source = "general";
            if (!ids.insert(p.id).second) throw ValidationError("duplicate general corpus id '" + p.id + "'");
            out.push_back(std::move(p));
        } catch (const json::exception& e) {
            throw ValidationError(path.string() + ": " + e.what());
        }
    }
    return out;
}

std::string SftDataset::digest() const {
    std::vector<std::string> lines;
    lines.reserve(pairs.size());
    for (const auto& p : pairs) lines.push_back(canonical_dump(json(p)));
    return digest_lines(lines);
}

SftDataset build_sft_dataset(const DatasetPartition& click, const std::vector<SftPair>& general,
                             double mix_ratio, std::uint64_t seed) {
    if (click.records.empty()) throw ValidationError("SFT build needs a non-empty click partition");
    if (!(mix_ratio >= 0.0)) throw ValidationError("mix_ratio must be >= 0");

    SftDataset out;
    for (const auto& r : click.records) {
        if (!r.suggestions || !r.suggestions->format_ok)
            throw ValidationError("click record '" + r.id() + "' has no well-formed suggestion set");
        auto p = prompt::render_generation_prompt(r.context);
        out.pairs.push_back({r.id(), "domain", p.system_text, p.user_text,
                             prompt::serialize_options(r.suggestions->candidates)});
    }
    out.domain = out.pairs.size();

    const auto wanted = static_cast<std::size_t>(std::llround(mix_ratio * static_cast<double>(out.domain)));
    if (wanted > 0) {
        if (general.empty()) throw ValidationError("mix_ratio > 0 but the general corpus is empty");
        std::vector<std::size_t> order(general.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        deterministic_shuffle(order, derive_seed(seed, "general-order"));
        if (wanted > general.size())
            out.findings.push_back({Severity::warning, "",
                                    "general corpus has " + std::to_string(general.size()) +
                                        " pairs, " + std::to_string(wanted) + " requested; reusing pairs"});
        for (std::size_t i = 0; i < wanted; ++i) {
            SftPair p = general[order[i % order.size()]];
            if (i >= general.size()) p.id += "#" + std::to_string(i / general.size());
            p.source = "general";
            out.pairs.push_back(std::move(p));
        }
        out.general = wanted;
    }
    deterministic_shuffle(out.pairs, derive_seed(seed, "interleave"));
    return out;
}

DatasetPartition merge_training_contexts(const DatasetPartition& click, const DatasetPartition& hard) {
    DatasetPartition out;
    out.name = PartitionName::hard;
    std::unordered_set<std::string> seen;
    for (const auto* part : {&click, &hard}) {
        for (const auto& r : part->records) {
            if (!seen.insert(r.id()).second) continue;
            PartitionRecord plain;
            plain.context = r.context;
            out.records.push_back(std::move(plain));
        }
    }
    return out;
}

void noop_trainer_hook(const std::filesystem::path& hyperparams_path,
                       const std::filesystem::path& result_path) {
    auto hp = json::parse(read_file(hyperparams_path), nullptr, false);
    if (hp.is_discarded() || !hp.contains("policy_endpoint"))
        throw ValidationError(hyperparams_path.string() + ": no policy_endpoint");
    write_file_atomic(result_path, canonical_dump(json{{"policy_endpoint", hp["policy_endpoint"]}}) + "\n");
}

TrainerResult run_trainer_hook(const std::vector<std::string>& argv,
                               const std::filesystem::path& export_path,
                               const std::filesystem::path& hyperparams_path,
                               const std::filesystem::path& result_path) {
    std::error_code ec;
    std::filesystem::remove(result_path, ec);
    if (argv.empty()) {
        try {
            noop_trainer_hook(hyperparams_path, result_path);
        } catch (const Error& e) {
            throw TrainerHookError(std::string("built-in no-op hook: ") + e.what(), 1);
        }
    } else {
        std::vector<std::string> args = argv;
        args.push_back(export_path.string());
        args.push_back(hyperparams_path.string());
        args.push_back(result_path.string());
        std::vector<char*> cargs;
        for (auto& a : args) cargs.push_back(a.data());
        cargs.push_back(nullptr);

        pid_t pid = 0;
        int rc = ::posix_spawnp(&pid, cargs[0], nullptr, nullptr, cargs.data(), environ);
        if (rc != 0)
            throw TrainerHookError("cannot start trainer hook '" + argv[0] + "': " + std::strerror(rc), 127);
        int status = 0;
        while (::waitpid(pid, &status, 0) < 0) {
            if (errno != EINTR) throw TrainerHookError("waitpid failed for trainer hook", 1);
        }
        if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
            const int code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
            throw TrainerHookError("trainer hook exited with status " + std::to_string(code), code);
        }
    }
    json result;
    try {
        result = json::parse(read_file(result_path));
        return TrainerResult{result.at("policy_endpoint").get<EndpointRef>()};
    } catch (const std::exception& e) {
        throw TrainerHookError(std::string("trainer hook result unreadable: ") + e.what(), 0);
    }
}

}  // namespace coldqs::orchestrator
