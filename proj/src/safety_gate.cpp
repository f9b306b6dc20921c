#include "sevo/safety_gate.hpp"

#include "sevo/error.hpp"

#include <cmath>
#include <string>

namespace sevo {

std::string_view to_string(GatePhase phase) {
    switch (phase) {
    case GatePhase::idle: return "IDLE";
    case GatePhase::debouncing: return "DEBOUNCING";
    case GatePhase::armed: return "ARMED";
    }
    return "?";
}

GatePhase gate_phase_from_string(std::string_view name) {
    if (name == "IDLE") return GatePhase::idle;
    if (name == "DEBOUNCING") return GatePhase::debouncing;
    if (name == "ARMED") return GatePhase::armed;
    throw InvalidArgument("unknown gate phase '" + std::string(name) + "'");
}

void GateConfig::validate() const {
    if (!(debounce > 0.0)) throw InvalidArgument("gate debounce must be positive");
    if (flicker_tolerance < 0) throw InvalidArgument("gate flicker tolerance must be non-negative");
    if (!(frame_rate > 0.0)) throw InvalidArgument("gate frame rate must be positive");
}

int GateConfig::required_frames() const {
    // Guard against products like 0.1 * 30 landing a hair above an integer.
    const double frames = debounce * frame_rate;
    const double nearest = std::round(frames);
    const double exact = std::abs(frames - nearest) < 1e-9 ? nearest : std::ceil(frames);
    return std::max(1, static_cast<int>(exact));
}

GateStep gate_step(const GateState& state, bool detected, const GateConfig& config) {
    const int required = config.required_frames();
    GateState next = state;
    switch (state.phase) {
    case GatePhase::idle:
        if (detected) {
            next = {required <= 1 ? GatePhase::armed : GatePhase::debouncing, 1, 0};
        }
        break;
    case GatePhase::debouncing:
        if (detected) {
            next.consecutive_present += 1;
            next.consecutive_absent = 0;
            if (next.consecutive_present >= required) next.phase = GatePhase::armed;
        } else {
            next.consecutive_absent += 1;
            if (next.consecutive_absent > config.flicker_tolerance) next = GateState{};
        }
        break;
    case GatePhase::armed:
        if (detected) {
            next.consecutive_present += 1;
            next.consecutive_absent = 0;
        } else {
            next.consecutive_absent += 1;
            if (next.consecutive_absent > config.flicker_tolerance) {
                next.phase = GatePhase::debouncing;
                next.consecutive_present = 0;
            }
        }
        break;
    }
    return {next, next.phase == GatePhase::armed && detected};
}

} // namespace sevo
