#include "sevo/illumination.hpp"

#include "sevo/error.hpp"

#include <algorithm>
#include <cmath>

namespace sevo {

void LedSpec::validate() const {
    if (!(power >= 0.0)) throw InvalidArgument("LED power must be non-negative");
    if (!(falloff_scale > 0.0)) throw InvalidArgument("LED falloff scale must be positive");
}

void Lighting::validate() const {
    for (double g : ambient) {
        if (!(g >= 0.0 && g <= 1.0)) throw InvalidArgument("ambient gains must lie in [0, 1]");
    }
    if (led) led->validate();
}

Rgb led_contribution(const LedSpec& led, double distance) {
    if (distance < 0.0) throw InvalidArgument("LED distance must be non-negative");
    const double ratio = distance / led.falloff_scale;
    const double g = std::round(255.0 * led.power / (1.0 + ratio * ratio));
    return {static_cast<std::uint8_t>(std::clamp(g, 0.0, 255.0)), 0, 0};
}

LedPosition led_position(LedMount mount) {
    switch (mount) {
    case LedMount::arm_base: return {{60.0, 32.0}, 0.0};
    case LedMount::overhead: return {{32.0, 32.0}, 24.0};
    }
    return {};
}

double led_distance(const LedSpec& led, Vec2 floor_point) {
    const auto pos = led_position(led.mount);
    const double planar = distance(pos.xy, floor_point);
    return std::hypot(planar, pos.height);
}

double led_dominance(double power) { return std::clamp(0.6 * power, 0.0, 0.6); }

std::array<double, 3> effective_ambient(const Lighting& lighting) {
    if (!lighting.led) return lighting.ambient;
    const double d = led_dominance(lighting.led->power);
    std::array<double, 3> out{};
    for (int c = 0; c < 3; ++c) out[c] = lighting.ambient[c] + d * (1.0 - lighting.ambient[c]);
    return out;
}

std::optional<SpecularAnchor> specular_anchor(const std::optional<LedSpec>& led, Vec2 bottle_position) {
    if (!led) return std::nullopt;
    const auto pos = led_position(led->mount);
    Vec2 toward = pos.xy - bottle_position;
    const double len = toward.norm();
    // Highlight sits one unit from the bottle center on the side facing the LED.
    const Vec2 offset = len > 1e-9 ? (1.0 / len) * toward : Vec2{0.0, 0.0};
    SpecularAnchor anchor;
    anchor.center = bottle_position + offset;
    anchor.radius = 2.0;
    anchor.intensity = led_contribution(*led, led_distance(*led, bottle_position))[0];
    return anchor;
}

std::optional<HighlightDisc> specular_anchor(const std::optional<LedSpec>& led, Vec2 bottle_position,
                                             const CameraView& view) {
    const auto anchor = specular_anchor(led, bottle_position);
    if (!anchor) return std::nullopt;
    HighlightDisc disc;
    disc.center_px = view.world_to_pixel(anchor->center);
    disc.radius_px = anchor->radius * view.scale();
    disc.intensity = anchor->intensity;
    return disc;
}

} // namespace sevo
