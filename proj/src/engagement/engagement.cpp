#include "coldqs/engagement.hpp"

#include <unordered_set>

#include "coldqs/canonical.hpp"
#include "coldqs/errors.hpp"

namespace coldqs::engagement {

namespace {

std::string_view kind_name(EventKind k) {
    switch (k) {
        case EventKind::message_sent: return "message_sent";
        case EventKind::reply: return "reply";
        case EventKind::other_chat_interaction: return "other_chat_interaction";
    }
    return "?";
}

EventKind parse_kind(const std::string& s) {
    if (s == "message_sent") return EventKind::message_sent;
    if (s == "reply") return EventKind::reply;
    if (s == "other_chat_interaction") return EventKind::other_chat_interaction;
    throw ValidationError("unknown event_kind '" + s + "'");
}

Arm parse_arm(const std::string& s) {
    if (s == "treatment") return Arm::treatment;
    if (s == "control") return Arm::control;
    throw ValidationError("unknown experiment_arm '" + s + "'");
}

}  // namespace

void to_json(json& j, const InteractionEvent& v) {
    j = json{{"user_id", v.user_id},
             {"timestamp", v.timestamp},
             {"event_kind", kind_name(v.event_kind)},
             {"experiment_arm", v.experiment_arm == Arm::treatment ? "treatment" : "control"}};
}

void from_json(const json& j, InteractionEvent& v) {
    v.user_id = j.at("user_id").get<std::string>();
    if (v.user_id.empty()) throw ValidationError("event with empty user_id");
    v.timestamp = j.at("timestamp").get<std::int64_t>();
    v.event_kind = parse_kind(j.at("event_kind").get<std::string>());
    v.experiment_arm = parse_arm(j.at("experiment_arm").get<std::string>());
}

std::vector<InteractionEvent> load_events(const std::filesystem::path& path) {
    std::vector<InteractionEvent> out;
    std::size_t i = 0;
    for (const auto& row : read_jsonl(path)) {
        ++i;
        try {
            out.push_back(row.get<InteractionEvent>());
        } catch (const json::exception& e) {
            throw ValidationError(path.string() + ": event " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

std::vector<InteractionEvent> filter_window(std::span<const InteractionEvent> events,
                                            std::optional<std::int64_t> start,
                                            std::optional<std::int64_t> end) {
    std::vector<InteractionEvent> out;
    for (const auto& e : events) {
        if (start && e.timestamp < *start) continue;
        if (end && e.timestamp >= *end) continue;
        out.push_back(e);
    }
    return out;
}

std::size_t chat_uv(std::span<const InteractionEvent> events) {
    std::unordered_set<std::string_view> users;
    for (const auto& e : events) users.insert(e.user_id);
    return users.size();
}

std::size_t chat_pv(std::span<const InteractionEvent> events) { return events.size(); }

double growth_gap(double treatment, double control) {
    if (control == 0.0) throw PreconditionError("growth gap is undefined for a zero control value");
    if (control < 0.0) throw PreconditionError("growth gap needs a positive control value");
    return (treatment - control) / control;
}

ArmReport arm_report(std::span<const InteractionEvent> events) {
    std::vector<InteractionEvent> treatment;
    std::vector<InteractionEvent> control;
    for (const auto& e : events) (e.experiment_arm == Arm::treatment ? treatment : control).push_back(e);
    if (treatment.empty()) throw PreconditionError("log has no treatment-arm events");
    if (control.empty()) throw PreconditionError("log has no control-arm events");

    ArmReport r;
    r.treatment_uv = chat_uv(treatment);
    r.control_uv = chat_uv(control);
    r.treatment_pv = chat_pv(treatment);
    r.control_pv = chat_pv(control);
    r.delta_chat_uv = growth_gap(static_cast<double>(r.treatment_uv), static_cast<double>(r.control_uv));
    r.delta_chat_pv = growth_gap(static_cast<double>(r.treatment_pv), static_cast<double>(r.control_pv));
    return r;
}

json to_json(const ArmReport& r) {
    return json{{"treatment", {{"chat_uv", r.treatment_uv}, {"chat_pv", r.treatment_pv}}},
                {"control", {{"chat_uv", r.control_uv}, {"chat_pv", r.control_pv}}},
                {"delta_chat_uv", r.delta_chat_uv},
                {"delta_chat_pv", r.delta_chat_pv}};
}

}  // namespace coldqs::engagement
