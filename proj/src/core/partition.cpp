#include "coldqs/partition.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "coldqs/canonical.hpp"
#include "coldqs/errors.hpp"

namespace coldqs {

namespace {

bool blank(std::string_view s) {
    return s.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos;
}

void check_suggestions(const PartitionRecord& r, std::vector<Finding>& out) {
    const auto& s = *r.suggestions;
    if (s.k <= 0) out.push_back({Severity::error, r.id(), "suggestions.k must be positive"});
    if (!s.format_ok) return;
    if (static_cast<int>(s.candidates.size()) != s.k) {
        out.push_back({Severity::error, r.id(), "format_ok suggestion set must hold exactly k candidates"});
        return;
    }
    std::set<std::string> seen;
    for (const auto& c : s.candidates) {
        if (blank(c)) out.push_back({Severity::error, r.id(), "empty candidate in format_ok set"});
        if (!seen.insert(c).second)
            out.push_back({Severity::error, r.id(), "duplicate candidate '" + c + "'"});
    }
}

}  // namespace

DatasetPartition load_partition(const std::filesystem::path& path, PartitionName name) {
    DatasetPartition p;
    p.name = name;
    auto rows = read_jsonl(path);
    p.records.reserve(rows.size());
    std::size_t i = 0;
    for (const auto& row : rows) {
        ++i;
        try {
            p.records.push_back(row.get<PartitionRecord>());
        } catch (const json::exception& e) {
            throw ValidationError(path.string() + ": record " + std::to_string(i) + ": " +
                                  e.what());
        }
    }
    return p;
}

std::vector<std::string> canonical_lines(const DatasetPartition& partition) {
    std::vector<std::string> lines;
    lines.reserve(partition.records.size());
    for (const auto& r : partition.records) lines.push_back(canonical_dump(json(r)));
    return lines;
}

void save_partition(const std::filesystem::path& path, const DatasetPartition& partition) {
    std::string out = canonical_dump(json{{"schema_version", kPartitionSchemaVersion}});
    out.push_back('\n');
    for (const auto& line : canonical_lines(partition)) {
        out += line;
        out.push_back('\n');
    }
    write_file_atomic(path, out);
}

std::vector<Finding> validate_verdict(const JudgeVerdict& v) {
    std::vector<Finding> out;
    int failing = 0;
    for (const auto& c : v.per_candidate) {
        for (auto d : kAllDimensions) {
            int x = c.get(d);
            if (x != 0 && x != 1) {
                out.push_back({Severity::error, v.context_ref,
                               "dimension " + std::string(to_string(d)) + " is not binary"});
            }
        }
        if (!c.all_pass()) ++failing;
    }
    if (v.aggregate_score != v.k() - failing) {
        out.push_back({Severity::error, v.context_ref,
                       "aggregate_score " + std::to_string(v.aggregate_score) +
                           " disagrees with per-candidate failures (expected " +
                           std::to_string(v.k() - failing) + ")"});
    }
    return out;
}

std::vector<Finding> validate_partition(const DatasetPartition& partition) {
    std::vector<Finding> out;
    std::unordered_set<std::string> ids;
    for (const auto& r : partition.records) {
        const auto& ctx = r.context;
        if (ctx.record_id.empty())
            out.push_back({Severity::error, ctx.record_id, "empty record_id"});
        else if (!ids.insert(ctx.record_id).second)
            out.push_back({Severity::error, ctx.record_id, "duplicate record_id"});

        if (blank(ctx.current_query))
            out.push_back({Severity::error, ctx.record_id, "current_query is empty"});

        for (std::size_t i = 1; i < ctx.history.size(); ++i) {
            if (ctx.history[i].speaker == ctx.history[i - 1].speaker) {
                out.push_back({Severity::warning, ctx.record_id,
                               "history speakers do not alternate at turn " + std::to_string(i)});
                break;
            }
        }

        switch (partition.name) {
            case PartitionName::click:
                if (ctx.click_label != ClickLabel::clicked)
                    out.push_back({Severity::error, ctx.record_id,
                                   "click partition holds a record labeled " +
                                       std::string(to_string(ctx.click_label))});
                if (!r.suggestions)
                    out.push_back({Severity::error, ctx.record_id,
                                   "click record carries no displayed suggestion set"});
                break;
            case PartitionName::unclick:
                if (ctx.click_label != ClickLabel::unclicked)
                    out.push_back({Severity::error, ctx.record_id,
                                   "unclick partition holds a record labeled " +
                                       std::string(to_string(ctx.click_label))});
                break;
            case PartitionName::pseudo:
            case PartitionName::hard:
                if (!r.uncertainty)
                    out.push_back({Severity::error, ctx.record_id, "missing uncertainty record"});
                break;
            default:
                break;
        }

        if (r.suggestions) {
            check_suggestions(r, out);
            if (r.suggestions->context_ref != ctx.record_id)
                out.push_back({Severity::error, ctx.record_id, "suggestions.context_ref mismatch"});
        }
        if (r.verdict) {
            auto vf = validate_verdict(*r.verdict);
            for (auto& f : vf) f.record_id = ctx.record_id;
            out.insert(out.end(), vf.begin(), vf.end());
        }
        if (r.uncertainty && r.uncertainty->u < 0.0)
            out.push_back({Severity::error, ctx.record_id, "negative uncertainty"});
    }
    return out;
}

bool has_errors(const std::vector<Finding>& findings) {
    return std::any_of(findings.begin(), findings.end(),
                       [](const Finding& f) { return f.severity == Severity::error; });
}

}  // namespace coldqs
