#pragma once

#include "sevo/camera.hpp"
#include "sevo/detector.hpp"
#include "sevo/episode.hpp"
#include "sevo/frame.hpp"
#include "sevo/observation.hpp"
#include "sevo/protocol.hpp"
#include "sevo/rng.hpp"
#include "sevo/safety_gate.hpp"
#include "sevo/scene.hpp"

#include <string_view>
#include <vector>

namespace sevo {

inline constexpr Vec2 kGripperHome{52.0, 32.0};
inline constexpr double kMaxStepDelta = 2.0;
inline constexpr double kGripRate = 0.25;
inline constexpr double kGripClosed = 0.2;
inline constexpr double kGraspRadius = 3.0;
inline constexpr double kRequiredDrag = 8.0;
inline constexpr int kMaxSteps = 120;
inline constexpr int kMissClosures = 3;

// `scene` is the scene as sampled; the bottle's current position lives in
// `bottle` and differs from the sampled one once it is carried.
struct EnvState {
    SceneSpec scene;
    std::optional<Vec2> bottle;
    Vec2 gripper = kGripperHome;
    double grip = 1.0;
    int t = 0;
    bool holding = false;

    JointState joint_state() const { return {{gripper.x, gripper.y, grip}}; }
    // Scene with the bottle at its current position.
    SceneSpec current_scene() const;

    friend bool operator==(const EnvState&, const EnvState&) = default;
};

EnvState initial_state(const SceneSpec& scene);

// Procedural scene for an environment class. Every call consumes the same
// draws from `rng` regardless of `env` and `protocol`, so scenes sampled with the
// same seed under different flags pair up (same bottle pose, same clutter
// layout where applicable).
//
// `null_scene` forces a scene without a bottle.
SceneSpec sample_scene(EnvClass env, const ProtocolFlags& protocol, Rng& rng, bool null_scene = false);

// Background used when backgrounds are not varied: one fixed room.
SceneSpec canonical_background();

struct RenderResult {
    Frame frame;
    SegmentationMask truth;
};

// Throws InvalidArgument when `camera` is not in the rig.
RenderResult render(const EnvState& state, const CameraRig& rig, CameraId camera);
RenderResult render_view(const SceneSpec& scene, Vec2 gripper, double grip, const CameraView& view);

// Renderer that caches the static layers (floor, clutter, distractors,
// lighting) of body-fixed cameras. Output is identical to render().
class Renderer {
public:
    Renderer(const SceneSpec& scene, CameraRig rig);

    RenderResult render(const EnvState& state, CameraId camera);
    const CameraRig& rig() const { return rig_; }

private:
    SceneSpec scene_;
    CameraRig rig_;
    std::vector<std::vector<float>> static_layers_;
};

// Ground-truth masks used by the mock detector.
SegmentationMask bottle_mask(const SceneSpec& scene, const CameraView& view);
SegmentationMask distractor_mask(const SceneSpec& scene, std::size_t index, const CameraView& view);

CameraView view_for(const EnvState& state, const CameraRig& rig, CameraId camera);

EnvState step(const EnvState& state, const Action& action);

enum class Outcome { success, miss, false_trigger, timeout };
std::string_view to_string(Outcome outcome);

// Scores a rollout. States are in time order starting from the initial state.
Outcome grasp_outcome(const std::vector<EnvState>& trajectory, int max_steps = kMaxSteps);

// Incremental form of grasp_outcome for rollouts that stop early.
class OutcomeTracker {
public:
    explicit OutcomeTracker(const EnvState& initial, int max_steps = kMaxSteps);

    // Feeds the next state. Returns true once the outcome is decided.
    bool observe(const EnvState& state);
    bool decided() const { return decided_.has_value(); }
    Outcome outcome() const;

private:
    bool null_scene_;
    Vec2 bottle_start_{};
    int max_steps_;
    EnvState previous_;
    int closures_ = 0;
    bool moved_ = false;
    std::optional<Outcome> decided_;
};

// Scripted controller used by the oracle teleoperator.
Action oracle_action(const EnvState& state);

struct DemoOptions {
    CameraRig rig = default_rig();
    DetectorNoise noise;
    OverlayConfig overlay;
    int max_steps = kMaxSteps;
    // Steps of holding still recorded after the task completes.
    int settle_steps = 0;
    // Length of null-scene episodes.
    int null_steps = 45;
};

// Runs detection, target selection and the gate every frame; commands zero
// motion until the gate is armed, then approaches, grasps and drags the bottle
// to the left. Null scenes produce all-zero actions.
EpisodeRecord oracle_demonstrate(const SceneSpec& scene, const GateConfig& gate, const ProtocolFlags& protocol,
                                 Rng& rng, const DemoOptions& options = {});

} // namespace sevo
