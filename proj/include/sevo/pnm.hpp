#pragma once

#include "sevo/frame.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sevo::pnm {

// Binary PPM ("P6", maxval 255).
std::vector<std::uint8_t> encode_ppm(const Frame& frame);
Frame decode_ppm(std::span<const std::uint8_t> bytes, const std::string& source = "<memory>");

// Binary PGM ("P5", maxval 255). Mask bits map to 0 / 255; on read any value
// other than 0 or 255 is rejected.
std::vector<std::uint8_t> encode_pgm(const SegmentationMask& mask);
SegmentationMask decode_pgm(std::span<const std::uint8_t> bytes, const std::string& source = "<memory>");

void write_ppm(const std::filesystem::path& path, const Frame& frame);
Frame read_ppm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const SegmentationMask& mask);
SegmentationMask read_pgm(const std::filesystem::path& path);

// Whole-file helpers. Errors name the path.
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

} // namespace sevo::pnm
