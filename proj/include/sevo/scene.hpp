#pragma once

#include "sevo/camera.hpp"
#include "sevo/frame.hpp"
#include "sevo/geometry.hpp"
#include "sevo/illumination.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sevo {

enum class EnvClass { train, novel_similar, novel_extreme };

std::string_view to_string(EnvClass env);
EnvClass env_class_from_string(std::string_view name);

struct ClutterItem {
    Rect rect;
    Rgb color{};

    friend bool operator==(const ClutterItem&, const ClutterItem&) = default;
};

// Transparent bottle seen from above: a disc composited over whatever is
// behind it.
struct BottleSpec {
    Vec2 position;
    double translucency = 0.25;
    Rgb tint{0, 0, 0};
    double radius = 3.0;

    friend bool operator==(const BottleSpec&, const BottleSpec&) = default;
};

inline constexpr double kDistractorRadius = 2.5;

// Floor textures. Ids 0-2 form the training set, 3-5 the disjoint set used by
// unseen rooms.
inline constexpr int kTextureCount = 6;
inline constexpr int kTrainTextureCount = 3;

struct SceneSpec {
    Rgb floor_tone{50, 50, 50};
    int texture = 0;
    double texture_amplitude = 0.0;
    std::vector<ClutterItem> clutter;
    std::vector<Vec2> reflective_distractors;
    std::optional<BottleSpec> bottle;
    Lighting lighting;
    std::uint64_t rng_seed = 0;

    bool is_null() const { return !bottle.has_value(); }

    friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

// Flat key-value form ("floor_tone" -> "50 50 50", "bottle.x" -> "31.5", ...).
// Doubles use round-trip precision.
std::map<std::string, std::string> to_key_values(const SceneSpec& scene);
SceneSpec scene_from_key_values(const std::map<std::string, std::string>& kv);

// Reachable region for bottle placement.
inline constexpr Rect kBottleRegion{28.0, 26.0, 36.0, 38.0};

// Region in which the bottle must end up for the task to count as placed:
// the left edge strip.
inline constexpr double kPlacementStrip = 8.0;

} // namespace sevo
