#pragma once

#include "sevo/frame.hpp"

#include <vector>

namespace sevo {

// Overlay opacity and highlight color. Defaults are the deployed constants:
// alpha 0.45, yellow.
struct OverlayConfig {
    double alpha = 0.45;
    Rgb color = {255, 255, 0};

    void validate() const;
};

// Robot joint vector. The simulator uses three joints: gripper x, gripper y and
// grip aperture.
struct JointState {
    std::vector<double> joints;

    friend bool operator==(const JointState&, const JointState&) = default;
};

// What the policy sees at one timestep: one enhanced frame per camera plus the
// untouched joint state.
struct VirtualObservation {
    std::vector<Frame> frames;
    JointState joint_state;
    double timestamp = 0.0;
};

// Blends `config.color` into every pixel whose mask bit is set:
//   out = round_half_away((1 - alpha) * p + alpha * c), clamped to [0, 255].
// Pixels with mask bit 0 are copied unchanged. Throws ShapeError when the
// frame and mask dimensions differ.
Frame compose_overlay(const Frame& frame, const SegmentationMask& mask, const OverlayConfig& config);

// Blended value of one channel. Shared by the lookup-table fast path and
// exposed so callers can reason about single pixels.
std::uint8_t blend_channel(std::uint8_t pixel, std::uint8_t color, double alpha);

// Builds the policy observation. When `enabled`, frame i is composited with
// mask i; otherwise the frames pass through unchanged. The joint state is never
// modified.
VirtualObservation make_virtual_observation(const std::vector<Frame>& raw_frames,
                                            const std::vector<SegmentationMask>& masks,
                                            const JointState& joint_state,
                                            const OverlayConfig& config,
                                            bool enabled,
                                            double timestamp = 0.0);

// Area-mean downsampling to `out_size` x `out_size` cells, channels scaled to
// [0, 1]. Each cell is summed in double precision, divided, and rounded to six
// decimals. Frame dimensions must be multiples of `out_size`.
std::vector<float> downsample_area_mean(const Frame& frame, int out_size = 16);

} // namespace sevo
