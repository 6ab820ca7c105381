#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coldqs/types.hpp"

namespace coldqs::engagement {

enum class EventKind { message_sent, reply, other_chat_interaction };
enum class Arm { treatment, control };

struct InteractionEvent {
    std::string user_id;
    // Seconds since epoch. Logs need not be ordered.
    std::int64_t timestamp = 0;
    EventKind event_kind = EventKind::message_sent;
    Arm experiment_arm = Arm::treatment;

    bool operator==(const InteractionEvent&) const = default;
};

void to_json(json& j, const InteractionEvent& v);
void from_json(const json& j, InteractionEvent& v);

std::vector<InteractionEvent> load_events(const std::filesystem::path& path);

// Events with start <= timestamp < end. Either bound may be open.
std::vector<InteractionEvent> filter_window(std::span<const InteractionEvent> events,
                                            std::optional<std::int64_t> start,
                                            std::optional<std::int64_t> end);

// Distinct users.
std::size_t chat_uv(std::span<const InteractionEvent> events);
// All events, not deduplicated.
std::size_t chat_pv(std::span<const InteractionEvent> events);

/// (treatment - control) / control. Throws PreconditionError when control is 0.
double growth_gap(double treatment, double control);

struct ArmReport {
    std::size_t treatment_uv = 0;
    std::size_t control_uv = 0;
    std::size_t treatment_pv = 0;
    std::size_t control_pv = 0;
    double delta_chat_uv = 0.0;
    double delta_chat_pv = 0.0;
};

/// Throws PreconditionError when either arm has no events.
ArmReport arm_report(std::span<const InteractionEvent> events);

json to_json(const ArmReport& r);

}  // namespace coldqs::engagement
