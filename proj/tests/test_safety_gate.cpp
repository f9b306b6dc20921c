#include "sevo/error.hpp"
#include "sevo/rng.hpp"
#include "sevo/safety_gate.hpp"

#include <doctest.h>

#include <vector>

using namespace sevo;

namespace {

// Frame-count model of the gate: a run becomes active on a detection, counts
// detected frames, tolerates short gaps, and enables motion once the count
// reaches the required frames.
struct ReferenceGate {
    int required;
    int tolerance;
    bool active = false;
    bool armed = false;
    int count = 0;
    int gap = 0;

    bool feed(bool detected) {
        if (detected) {
            gap = 0;
            count = active ? count + 1 : 1;
            active = true;
            if (count >= required) armed = true;
        } else if (active) {
            ++gap;
            if (gap > tolerance) {
                if (armed) {
                    armed = false;
                    count = 0;
                } else {
                    active = false;
                    count = 0;
                }
            }
        }
        return armed && detected;
    }
};

std::vector<bool> run(const std::vector<bool>& stream, const GateConfig& cfg) {
    SafetyGate gate(cfg);
    std::vector<bool> out;
    for (bool d : stream) out.push_back(gate.update(d));
    return out;
}

} // namespace

TEST_CASE("required frames") {
    CHECK(GateConfig{}.required_frames() == 30);
    CHECK(GateConfig{0.1, 2, 30.0}.required_frames() == 3);
    CHECK(GateConfig{0.5, 2, 25.0}.required_frames() == 13);
    CHECK(GateConfig{0.001, 0, 30.0}.required_frames() == 1);
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(GateConfig({0.0, 2, 30.0}).validate(), InvalidArgument);
    CHECK_THROWS_AS(GateConfig({1.0, -1, 30.0}).validate(), InvalidArgument);
    CHECK_THROWS_AS(GateConfig({1.0, 2, 0.0}).validate(), InvalidArgument);
}

TEST_CASE("empty stream never arms") {
    SafetyGate gate;
    for (int i = 0; i < 10000; ++i) {
        REQUIRE_FALSE(gate.update(false));
        REQUIRE(gate.state().phase == GatePhase::idle);
    }
}

TEST_CASE("continuous detection arms on the 30th frame") {
    for (int t : {0, 5, 47}) {
        std::vector<bool> stream(t, false);
        stream.resize(t + 100, true);
        const auto out = run(stream, {});
        int first = -1;
        for (int i = 0; i < static_cast<int>(out.size()); ++i) {
            if (out[i]) {
                first = i;
                break;
            }
        }
        CHECK(first == t + 29);
    }
}

TEST_CASE("single dropouts are forgiven, triple dropouts are not") {
    std::vector<bool> forgiving;
    std::vector<bool> strict;
    for (int rep = 0; rep < 20; ++rep) {
        forgiving.insert(forgiving.end(), 10, true);
        forgiving.push_back(false);
        strict.insert(strict.end(), 10, true);
        strict.insert(strict.end(), 3, false);
    }
    SafetyGate a;
    bool armed = false;
    for (bool d : forgiving) {
        a.update(d);
        armed = armed || a.state().phase == GatePhase::armed;
    }
    CHECK(armed);

    SafetyGate b;
    for (bool d : strict) {
        CHECK_FALSE(b.update(d));
        CHECK(b.state().phase != GatePhase::armed);
    }
}

TEST_CASE("armed gate disarms after a long dropout and must debounce again") {
    std::vector<bool> stream(40, true);
    stream.insert(stream.end(), 3, false);
    stream.insert(stream.end(), 40, true);
    const auto out = run(stream, {});
    CHECK(out[39]);
    for (int i = 43; i < 43 + 29; ++i) CHECK_FALSE(out[i]);
    CHECK(out[43 + 29]);
}

TEST_CASE("gate matches the reference model on random streams") {
    Rng rng(1234);
    for (int trial = 0; trial < 1000; ++trial) {
        GateConfig cfg;
        cfg.debounce = rng.uniform(0.05, 1.5);
        cfg.frame_rate = trial % 3 == 0 ? 30.0 : rng.uniform(5.0, 60.0);
        cfg.flicker_tolerance = static_cast<int>(rng.uniform_int(0, 4));
        const int required = cfg.required_frames();
        ReferenceGate ref{required, cfg.flicker_tolerance};
        SafetyGate gate(cfg);
        const double p = rng.uniform(0.3, 1.0);
        const int n = static_cast<int>(rng.uniform_int(1, 400));
        for (int i = 0; i < n; ++i) {
            const bool d = rng.bernoulli(p);
            const bool want = ref.feed(d);
            const bool got = gate.update(d);
            REQUIRE(got == want);
            // Motion is never enabled on a frame without a detection.
            if (got) REQUIRE(d);
        }
    }
}

TEST_CASE("reset") {
    GateState s{GatePhase::armed, 50, 1};
    const auto r = reset(s);
    CHECK(r == GateState{});
    CHECK(reset(r) == r);
    CHECK(gate_step(r, false, {}).state.phase == GatePhase::idle);

    SafetyGate gate;
    for (int i = 0; i < 40; ++i) gate.update(true);
    CHECK(gate.state().phase == GatePhase::armed);
    gate.reset();
    CHECK(gate.state() == GateState{});
}

TEST_CASE("phase names round-trip") {
    for (auto p : {GatePhase::idle, GatePhase::debouncing, GatePhase::armed}) {
        CHECK(gate_phase_from_string(to_string(p)) == p);
    }
    CHECK_THROWS_AS(gate_phase_from_string("armed"), InvalidArgument);
}
