#pragma once

#include "sevo/geometry.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sevo {

inline constexpr double kWorldSize = 64.0;
inline constexpr int kRenderSize = 64;

enum class CameraKind { front, side, overhead, wrist };

std::string_view to_string(CameraKind kind);
CameraKind camera_kind_from_string(std::string_view name);

inline bool is_body_fixed(CameraKind kind) { return kind != CameraKind::wrist; }

// A camera in the rig. Body-fixed cameras see a constant world window (crop)
// with optional mirroring. For the wrist camera the window is derived from the
// gripper pose at render time and `window` is ignored.
struct CameraSpec {
    CameraKind kind = CameraKind::front;
    Rect window{0.0, 0.0, kWorldSize, kWorldSize};
    bool flip_x = false;
    bool flip_y = false;

    friend bool operator==(const CameraSpec&, const CameraSpec&) = default;
};

struct CameraRig {
    std::vector<CameraSpec> cameras;

    friend bool operator==(const CameraRig&, const CameraRig&) = default;
};

// Front camera plus mirrored side camera, both seeing the full workspace.
CameraRig default_rig(bool with_wrist = false);

// Index of a camera in a rig.
using CameraId = int;

// Resolved mapping from output pixels to world coordinates for one render.
struct CameraView {
    Rect window{0.0, 0.0, kWorldSize, kWorldSize};
    bool flip_x = false;
    bool flip_y = false;
    int width = kRenderSize;
    int height = kRenderSize;

    // World point at the center of pixel (px, py).
    Vec2 pixel_to_world(int px, int py) const;
    // Continuous pixel coordinates of a world point, with pixel centers at
    // integer coordinates.
    Vec2 world_to_pixel(Vec2 p) const;
    // Pixels per world unit along x.
    double scale() const { return width / window.width(); }
};

// Crop half-width of the wrist camera for a given gripper-to-bottle distance.
// Shrinks (zooms in) as the gripper approaches the bottle.
double wrist_half_extent(std::optional<double> distance_to_bottle);

CameraView resolve_view(const CameraSpec& camera, Vec2 gripper, std::optional<Vec2> bottle);

// True iff the union of body-fixed camera windows contains the whole
// workspace square. Wrist cameras never count toward coverage.
bool coverage_check(const CameraRig& rig);

} // namespace sevo
