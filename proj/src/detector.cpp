#include "sevo/detector.hpp"

#include "sevo/error.hpp"
#include "sevo/sim_env.hpp"

#include <algorithm>

namespace sevo {

void DetectorNoise::validate() const {
    auto prob = [](double p, const char* what) {
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument(std::string(what) + " must lie in [0, 1]");
    };
    prob(miss_rate, "miss_rate");
    prob(false_positive_rate, "false_positive_rate");
    if (jitter_px < 0) throw InvalidArgument("jitter_px must be non-negative");
}

DetectorNoise DetectorNoise::with_led(bool led_on) const {
    DetectorNoise n = *this;
    if (led_on) n.miss_rate *= kLedMissFactor;
    return n;
}

namespace {

// Square structuring element, applied as a row pass then a column pass. Each
// pass keeps a running count of set cells in the window; cells outside the
// raster count as background, so "all" needs the full window inside.
SegmentationMask morph(const SegmentationMask& mask, int radius, bool grow) {
    if (radius <= 0) return mask;
    const int w = mask.width();
    const int h = mask.height();
    const int full = 2 * radius + 1;
    auto pass = [&](const std::vector<std::uint8_t>& in, int len, int lines, int stride, int step) {
        std::vector<std::uint8_t> out(in.size());
        for (int line = 0; line < lines; ++line) {
            const std::size_t base = static_cast<std::size_t>(line) * stride;
            auto at = [&](int i) { return in[base + static_cast<std::size_t>(i) * step]; };
            int count = 0;
            for (int i = 0; i < std::min(radius, len); ++i) count += at(i);
            for (int i = 0; i < len; ++i) {
                if (i + radius < len) count += at(i + radius);
                if (i - radius - 1 >= 0) count -= at(i - radius - 1);
                out[base + static_cast<std::size_t>(i) * step] = (grow ? count > 0 : count == full) ? 1 : 0;
            }
        }
        return out;
    };
    std::vector<std::uint8_t> cells(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) cells[static_cast<std::size_t>(y) * w + x] = mask.at(x, y) ? 1 : 0;
    }
    auto rows = pass(cells, w, h, w, 1);
    auto out = pass(rows, h, w, 1, w);
    return SegmentationMask(w, h, std::move(out), mask.confidence());
}

} // namespace

SegmentationMask dilate(const SegmentationMask& mask, int radius) { return morph(mask, radius, true); }

SegmentationMask erode(const SegmentationMask& mask, int radius) { return morph(mask, radius, false); }

std::vector<Detection> mock_detect(const SceneSpec& scene, const CameraView& view, const DetectorNoise& noise,
                                   Rng& rng) {
    noise.validate();
    const bool miss = rng.bernoulli(noise.miss_rate);
    const auto jitter = rng.uniform_int(-noise.jitter_px, noise.jitter_px);
    const bool false_positive = rng.bernoulli(noise.false_positive_rate);
    const double distractor_u = rng.uniform();
    const double fp_confidence = rng.uniform(0.3, 0.7);

    std::vector<Detection> out;
    if (miss) return out;
    if (scene.bottle) {
        SegmentationMask mask = bottle_mask(scene, view);
        if (jitter > 0) mask = dilate(mask, static_cast<int>(jitter));
        if (jitter < 0) mask = erode(mask, static_cast<int>(-jitter));
        if (mask.area() > 0) {
            mask.set_confidence(1.0);
            out.push_back({std::move(mask), kTargetLabel, 1.0});
        }
    }
    if (false_positive && !scene.reflective_distractors.empty()) {
        const auto n = scene.reflective_distractors.size();
        const auto idx = std::min(n - 1, static_cast<std::size_t>(distractor_u * static_cast<double>(n)));
        SegmentationMask mask = distractor_mask(scene, idx, view);
        if (mask.area() > 0) {
            mask.set_confidence(fp_confidence);
            out.push_back({std::move(mask), kTargetLabel, fp_confidence});
        }
    }
    return out;
}

std::optional<SegmentationMask> select_target(const std::vector<Detection>& detections) {
    const Detection* best = nullptr;
    std::size_t best_area = 0;
    for (const auto& d : detections) {
        if (d.class_label != kTargetLabel) continue;
        const std::size_t area = d.mask.area();
        if (!best || area > best_area || (area == best_area && d.confidence > best->confidence)) {
            best = &d;
            best_area = area;
        }
    }
    if (!best) return std::nullopt;
    return best->mask;
}

} // namespace sevo
