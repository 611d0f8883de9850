#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace rotwin {

enum class EndpointKind { TimeToEvent, EventCount, Continuous };
enum class Direction { LargerWins, SmallerWins };

// One endpoint of the composite: what it measures, which direction is
// favorable, and the symmetric tie margin in outcome units.
struct EndpointSpec {
    std::string id;
    EndpointKind kind = EndpointKind::TimeToEvent;
    Direction direction = Direction::LargerWins;
    double margin = 0.0;
};

struct TimeToEventOutcome {
    double time = 0.0; // observed time in days (event or censoring)
    bool event = false;
};

struct EventCountOutcome {
    long long count = 0;
};

struct ContinuousOutcome {
    double value = 0.0;
};

using Outcome = std::variant<TimeToEventOutcome, EventCountOutcome, ContinuousOutcome>;

inline EndpointKind outcome_kind(const Outcome& o) {
    switch (o.index()) {
        case 0: return EndpointKind::TimeToEvent;
        case 1: return EndpointKind::EventCount;
        default: return EndpointKind::Continuous;
    }
}

enum class Arm { Treatment, Control };

struct Subject {
    std::string id;
    Arm arm = Arm::Control;
    std::string stratum = "all";
    std::vector<Outcome> outcomes; // one per endpoint, kinds matching the specs
    std::optional<double> followup; // days; bounds observed event times when present
};

inline const char* kind_name(EndpointKind k) {
    switch (k) {
        case EndpointKind::TimeToEvent: return "time_to_event";
        case EndpointKind::EventCount: return "event_count";
        default: return "continuous";
    }
}

inline const char* direction_name(Direction d) {
    return d == Direction::LargerWins ? "larger_wins" : "smaller_wins";
}

} // namespace rotwin
