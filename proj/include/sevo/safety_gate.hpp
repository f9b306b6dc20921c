#pragma once

#include <string_view>

namespace sevo {

enum class GatePhase { idle, debouncing, armed };

std::string_view to_string(GatePhase phase);
GatePhase gate_phase_from_string(std::string_view name);

struct GateConfig {
    double debounce = 1.0;      // seconds
    int flicker_tolerance = 2;  // frames
    double frame_rate = 30.0;   // Hz

    void validate() const;
    // ceil(debounce * frame_rate), at least 1.
    int required_frames() const;
};

struct GateState {
    GatePhase phase = GatePhase::idle;
    int consecutive_present = 0;
    int consecutive_absent = 0;

    friend bool operator==(const GateState&, const GateState&) = default;
};

struct GateStep {
    GateState state;
    bool arm_enabled = false;
};

// Detector-motion binding.
//
// IDLE -> DEBOUNCING on the first detection. While debouncing, present frames
// accumulate and dropouts of at most `flicker_tolerance` consecutive frames are
// forgiven; a longer dropout returns to IDLE. Once the accumulated present count
// reaches `required_frames()` the gate is ARMED. An ARMED gate survives short
// dropouts but disarms to DEBOUNCING with zero progress on a longer one.
//
// arm_enabled is true only when the gate is ARMED and the current frame has a
// detection, so motion is never enabled on a frame without a detection.
GateStep gate_step(const GateState& state, bool detected, const GateConfig& config);

inline GateState reset(const GateState&) { return GateState{}; }

// Owning wrapper for callers that drive one gate per rollout.
class SafetyGate {
public:
    explicit SafetyGate(GateConfig config = {}) : config_(config) { config_.validate(); }

    bool update(bool detected) {
        auto next = gate_step(state_, detected, config_);
        state_ = next.state;
        return next.arm_enabled;
    }
    void reset() { state_ = GateState{}; }

    const GateState& state() const { return state_; }
    const GateConfig& config() const { return config_; }

private:
    GateConfig config_;
    GateState state_;
};

} // namespace sevo
