#pragma once

#include "sevo/frame.hpp"
#include "sevo/rng.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

namespace sevo::test {

inline Frame random_frame(Rng& rng, int w, int h) {
    Frame f(w, h);
    for (auto& b : f.pixels()) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    return f;
}

inline SegmentationMask random_mask(Rng& rng, int w, int h, double density = 0.5) {
    SegmentationMask m(w, h, 1.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) m.set(x, y, rng.bernoulli(density));
    }
    return m;
}

// Scalar blend written out directly from the formula, one channel at a time.
inline std::uint8_t oracle_blend(std::uint8_t p, std::uint8_t c, double alpha) {
    const double v = (1.0 - alpha) * p + alpha * c;
    const double r = v < 0 ? -std::floor(-v + 0.5) : std::floor(v + 0.5);
    return static_cast<std::uint8_t>(std::fmin(255.0, std::fmax(0.0, r)));
}

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        Rng rng(std::hash<std::string>{}(tag) ^ reinterpret_cast<std::uintptr_t>(this));
        path_ = std::filesystem::temp_directory_path() / ("sevo_" + tag + "_" + std::to_string(rng.next_u64()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace sevo::test
