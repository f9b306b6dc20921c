#include "sevo/observation.hpp"

#include "sevo/error.hpp"

#include <array>
#include <cmath>

namespace sevo {

void OverlayConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw InvalidArgument("overlay alpha must lie in [0, 1], got " + std::to_string(alpha));
    }
}

std::uint8_t blend_channel(std::uint8_t pixel, std::uint8_t color, double alpha) {
    const double v = (1.0 - alpha) * pixel + alpha * color;
    // std::round rounds half away from zero.
    const double r = std::round(v);
    if (r <= 0.0) return 0;
    if (r >= 255.0) return 255;
    return static_cast<std::uint8_t>(r);
}

Frame compose_overlay(const Frame& frame, const SegmentationMask& mask, const OverlayConfig& config) {
    config.validate();
    if (frame.width() != mask.width() || frame.height() != mask.height()) {
        throw ShapeError("frame " + frame.shape_string() + " does not match mask " + mask.shape_string());
    }
    // The blend of a channel depends only on its input byte, so three 256-entry
    // tables built from blend_channel reproduce the scalar formula exactly.
    std::array<std::array<std::uint8_t, 256>, 3> lut{};
    for (int c = 0; c < 3; ++c) {
        for (int v = 0; v < 256; ++v) {
            lut[c][v] = blend_channel(static_cast<std::uint8_t>(v), config.color[c], config.alpha);
        }
    }
    Frame out = frame;
    auto px = out.pixels();
    const auto bits = mask.bits();
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (!bits[i]) continue;
        auto* p = &px[3 * i];
        p[0] = lut[0][p[0]];
        p[1] = lut[1][p[1]];
        p[2] = lut[2][p[2]];
    }
    return out;
}

VirtualObservation make_virtual_observation(const std::vector<Frame>& raw_frames,
                                            const std::vector<SegmentationMask>& masks,
                                            const JointState& joint_state,
                                            const OverlayConfig& config,
                                            bool enabled,
                                            double timestamp) {
    if (raw_frames.size() != masks.size()) {
        throw ShapeError("got " + std::to_string(raw_frames.size()) + " frames but " + std::to_string(masks.size()) +
                         " masks");
    }
    VirtualObservation obs;
    obs.joint_state = joint_state;
    obs.timestamp = timestamp;
    obs.frames.reserve(raw_frames.size());
    for (std::size_t i = 0; i < raw_frames.size(); ++i) {
        const auto& f = raw_frames[i];
        const auto& m = masks[i];
        if (f.width() != m.width() || f.height() != m.height()) {
            throw ShapeError("camera " + std::to_string(i) + ": frame " + f.shape_string() + " does not match mask " +
                             m.shape_string());
        }
        obs.frames.push_back(enabled ? compose_overlay(f, m, config) : f);
    }
    return obs;
}

std::vector<float> downsample_area_mean(const Frame& frame, int out_size) {
    if (out_size < 1 || frame.width() % out_size != 0 || frame.height() % out_size != 0) {
        throw ShapeError("frame " + frame.shape_string() + " is not divisible into " + std::to_string(out_size) + "x" +
                         std::to_string(out_size) + " cells");
    }
    const int bw = frame.width() / out_size;
    const int bh = frame.height() / out_size;
    const double denom = 255.0 * bw * bh;
    const auto px = frame.pixels();
    std::vector<float> out(static_cast<std::size_t>(out_size) * out_size * 3);
    for (int cy = 0; cy < out_size; ++cy) {
        for (int cx = 0; cx < out_size; ++cx) {
            double sum[3] = {0.0, 0.0, 0.0};
            for (int y = cy * bh; y < (cy + 1) * bh; ++y) {
                const auto* row = &px[(static_cast<std::size_t>(y) * frame.width() + cx * bw) * 3];
                for (int x = 0; x < bw * 3; x += 3) {
                    sum[0] += row[x];
                    sum[1] += row[x + 1];
                    sum[2] += row[x + 2];
                }
            }
            auto* o = &out[(static_cast<std::size_t>(cy) * out_size + cx) * 3];
            for (int c = 0; c < 3; ++c) {
                o[c] = static_cast<float>(std::round(sum[c] / denom * 1e6) / 1e6);
            }
        }
    }
    return out;
}

} // namespace sevo
