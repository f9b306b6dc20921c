#pragma once

#include "sevo/camera.hpp"
#include "sevo/frame.hpp"
#include "sevo/rng.hpp"
#include "sevo/scene.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sevo {

inline constexpr const char* kTargetLabel = "bottle";

struct Detection {
    SegmentationMask mask;
    std::string class_label;
    double confidence = 0.0;

    friend bool operator==(const Detection&, const Detection&) = default;
};

struct DetectorNoise {
    double miss_rate = 0.0;
    int jitter_px = 0;
    double false_positive_rate = 0.0;

    void validate() const;
    // Noise with the red LED on: misses scaled by `kLedMissFactor`.
    DetectorNoise with_led(bool led_on) const;

    friend bool operator==(const DetectorNoise&, const DetectorNoise&) = default;
};

inline constexpr double kLedMissFactor = 0.3;

// Ground-truth bottle mask perturbed by noise. Draws from `rng` in a fixed
// order: miss, jitter, false positive, distractor choice, confidence.
std::vector<Detection> mock_detect(const SceneSpec& scene, const CameraView& view, const DetectorNoise& noise,
                                   Rng& rng);

// Mask of the largest "bottle" detection; ties go to higher confidence, then
// to the earlier entry.
std::optional<SegmentationMask> select_target(const std::vector<Detection>& detections);

// Square-structuring-element morphology used for boundary jitter.
SegmentationMask dilate(const SegmentationMask& mask, int radius);
SegmentationMask erode(const SegmentationMask& mask, int radius);

} // namespace sevo
