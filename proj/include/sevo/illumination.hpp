#pragma once

#include "sevo/camera.hpp"
#include "sevo/frame.hpp"
#include "sevo/geometry.hpp"

#include <array>
#include <optional>

namespace sevo {

enum class LedMount { arm_base, overhead };

// Red LED. Power 1.0 corresponds to the deployed 5 W unit.
struct LedSpec {
    double power = 1.0;
    LedMount mount = LedMount::arm_base;
    double falloff_scale = 24.0;

    void validate() const;
    friend bool operator==(const LedSpec&, const LedSpec&) = default;
};

struct Lighting {
    std::array<double, 3> ambient = {1.0, 1.0, 1.0};
    std::optional<LedSpec> led;

    void validate() const;
    friend bool operator==(const Lighting&, const Lighting&) = default;
};

// Red-only additive term, 8-bit scale:
//   g = round(255 * power / (1 + (distance / falloff_scale)^2))
Rgb led_contribution(const LedSpec& led, double distance);

// LED position in world units; z is the mounting height above the floor.
struct LedPosition {
    Vec2 xy;
    double height = 0.0;
};
LedPosition led_position(LedMount mount);

// Distance from the LED to a floor point.
double led_distance(const LedSpec& led, Vec2 floor_point);

// Ambient gains as seen by an exposure-adapted camera. A powered LED dominates
// the exposure, so ambient gains are pulled toward 1 by `led_dominance(power)`.
std::array<double, 3> effective_ambient(const Lighting& lighting);
double led_dominance(double power);

// Specular highlight on the bottle in world coordinates. Its parameters depend
// only on the LED and the geometry, never on the ambient gains.
struct SpecularAnchor {
    Vec2 center;
    double radius = 2.0;
    std::uint8_t intensity = 0;

    friend bool operator==(const SpecularAnchor&, const SpecularAnchor&) = default;
};

// Returns nothing without an LED. The highlight sits on the bottle, offset
// toward the LED, with intensity equal to the LED contribution at the bottle.
std::optional<SpecularAnchor> specular_anchor(const std::optional<LedSpec>& led, Vec2 bottle_position);

// The same highlight in pixel coordinates of a camera view. The radius scales
// with the view zoom: 2 px at the full-workspace 64 x 64 render.
struct HighlightDisc {
    Vec2 center_px;
    double radius_px = 2.0;
    std::uint8_t intensity = 0;
};
std::optional<HighlightDisc> specular_anchor(const std::optional<LedSpec>& led, Vec2 bottle_position,
                                             const CameraView& view);

} // namespace sevo
