#pragma once

#include "sevo/camera.hpp"
#include "sevo/frame.hpp"
#include "sevo/observation.hpp"
#include "sevo/protocol.hpp"
#include "sevo/safety_gate.hpp"
#include "sevo/scene.hpp"

#include <string>
#include <vector>

namespace sevo {

inline constexpr int kActionDim = 3;

// Per-step command: planar gripper motion in world units and a target grip
// aperture. Motion is clamped to [-2, 2] per axis when applied.
struct Action {
    double dx = 0.0;
    double dy = 0.0;
    double grip_cmd = 1.0;

    friend bool operator==(const Action&, const Action&) = default;
};

struct EpisodeMeta {
    std::string id;
    ProtocolFlags flags;
    SceneSpec scene;
    CameraRig rig;
    double frame_rate = 30.0;
    int action_dim = kActionDim;

    friend bool operator==(const EpisodeMeta&, const EpisodeMeta&) = default;
};

struct EpisodeStep {
    std::vector<Frame> raw;
    std::vector<SegmentationMask> masks;
    std::vector<Frame> sevo;
    JointState joints;
    Action action;
    GatePhase phase = GatePhase::idle;

    friend bool operator==(const EpisodeStep&, const EpisodeStep&) = default;
};

struct EpisodeRecord {
    EpisodeMeta meta;
    std::vector<EpisodeStep> steps;

    // Throws ShapeError unless every step carries one raw frame, mask and SEVO
    // frame per camera, all with the same dimensions.
    void validate() const;

    friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

} // namespace sevo
