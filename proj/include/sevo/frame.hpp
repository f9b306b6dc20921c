#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sevo {

using Rgb = std::array<std::uint8_t, 3>;

// H x W RGB raster, 8 bits per channel, row-major interleaved.
class Frame {
public:
    Frame() = default;
    Frame(int width, int height, Rgb fill = {0, 0, 0});
    Frame(int width, int height, std::vector<std::uint8_t> pixels);

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return pixels_.empty(); }

    Rgb at(int x, int y) const {
        const auto* p = &pixels_[index(x, y)];
        return {p[0], p[1], p[2]};
    }
    void set(int x, int y, Rgb c) {
        auto* p = &pixels_[index(x, y)];
        p[0] = c[0];
        p[1] = c[1];
        p[2] = c[2];
    }

    std::span<const std::uint8_t> pixels() const { return pixels_; }
    std::span<std::uint8_t> pixels() { return pixels_; }

    std::string shape_string() const;

    friend bool operator==(const Frame&, const Frame&) = default;

private:
    std::size_t index(int x, int y) const {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

// H x W binary raster. Confidence is carried for target selection; compositing
// only reads the bits.
class SegmentationMask {
public:
    SegmentationMask() = default;
    SegmentationMask(int width, int height, double confidence = 1.0);
    SegmentationMask(int width, int height, std::vector<std::uint8_t> bits, double confidence);

    int width() const { return width_; }
    int height() const { return height_; }

    bool at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
    void set(int x, int y, bool on) { bits_[static_cast<std::size_t>(y) * width_ + x] = on ? 1 : 0; }

    std::span<const std::uint8_t> bits() const { return bits_; }

    double confidence() const { return confidence_; }
    void set_confidence(double c);

    // Number of set pixels.
    std::size_t area() const;

    std::string shape_string() const;

    friend bool operator==(const SegmentationMask&, const SegmentationMask&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bits_;
    double confidence_ = 1.0;
};

} // namespace sevo
