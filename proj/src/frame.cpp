#include "sevo/frame.hpp"

#include "sevo/error.hpp"

#include <algorithm>

namespace sevo {

namespace {

void check_dims(int width, int height) {
    if (width < 1 || height < 1) {
        throw ShapeError("raster dimensions must be positive, got " + std::to_string(width) + "x" +
                         std::to_string(height));
    }
}

} // namespace

Frame::Frame(int width, int height, Rgb fill) : width_(width), height_(height) {
    check_dims(width, height);
    pixels_.resize(static_cast<std::size_t>(width) * height * 3);
    for (std::size_t i = 0; i < pixels_.size(); i += 3) {
        pixels_[i] = fill[0];
        pixels_[i + 1] = fill[1];
        pixels_[i + 2] = fill[2];
    }
}

Frame::Frame(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    check_dims(width, height);
    if (pixels_.size() != static_cast<std::size_t>(width) * height * 3) {
        throw ShapeError("frame " + shape_string() + " needs " + std::to_string(std::size_t(width) * height * 3) +
                         " bytes, got " + std::to_string(pixels_.size()));
    }
}

std::string Frame::shape_string() const {
    return std::to_string(width_) + "x" + std::to_string(height_) + "x3";
}

SegmentationMask::SegmentationMask(int width, int height, double confidence)
    : width_(width), height_(height), bits_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), 0) {
    check_dims(width, height);
    set_confidence(confidence);
}

SegmentationMask::SegmentationMask(int width, int height, std::vector<std::uint8_t> bits, double confidence)
    : width_(width), height_(height), bits_(std::move(bits)) {
    check_dims(width, height);
    if (bits_.size() != static_cast<std::size_t>(width) * height) {
        throw ShapeError("mask " + shape_string() + " needs " + std::to_string(std::size_t(width) * height) +
                         " values, got " + std::to_string(bits_.size()));
    }
    for (auto b : bits_) {
        if (b > 1) throw InvalidArgument("mask bits must be 0 or 1");
    }
    set_confidence(confidence);
}

void SegmentationMask::set_confidence(double c) {
    if (!(c >= 0.0 && c <= 1.0)) throw InvalidArgument("mask confidence must lie in [0, 1]");
    confidence_ = c;
}

std::size_t SegmentationMask::area() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::string SegmentationMask::shape_string() const {
    return std::to_string(width_) + "x" + std::to_string(height_);
}

} // namespace sevo
