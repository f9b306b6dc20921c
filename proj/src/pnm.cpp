#include "sevo/pnm.hpp"

#include "sevo/error.hpp"

#include <cctype>
#include <fstream>
#include <iterator>

namespace sevo::pnm {

namespace {

struct Header {
    int width = 0;
    int height = 0;
    std::size_t data_offset = 0;
};

// Parses "P?" <ws> width <ws> height <ws> maxval <single ws>, with '#'
// comments allowed between fields.
Header parse_header(std::span<const std::uint8_t> bytes, char kind, const std::string& source) {
    const std::string what = kind == '6' ? "PPM" : "PGM";
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != static_cast<std::uint8_t>(kind)) {
        throw FormatError(source + ": not a binary " + what + " (expected magic P" + kind + ")");
    }
    std::size_t pos = 2;
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_number = [&](const char* field) {
        const std::size_t before = pos;
        skip_space();
        if (pos == before) throw FormatError(source + ": malformed " + what + " header before " + field);
        long value = 0;
        const std::size_t start = pos;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            value = value * 10 + (bytes[pos] - '0');
            if (value > 1'000'000) throw FormatError(source + ": " + what + " " + field + " too large");
            ++pos;
        }
        if (pos == start) throw FormatError(source + ": malformed " + what + " header, missing " + field);
        return static_cast<int>(value);
    };
    Header h;
    h.width = read_number("width");
    h.height = read_number("height");
    const int maxval = read_number("maxval");
    if (h.width < 1 || h.height < 1) throw FormatError(source + ": " + what + " dimensions must be positive");
    if (maxval != 255) throw FormatError(source + ": " + what + " maxval must be 255, got " + std::to_string(maxval));
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
        throw FormatError(source + ": truncated " + what + " header");
    }
    h.data_offset = pos + 1;
    return h;
}

std::vector<std::uint8_t> header_bytes(const char* magic, int width, int height) {
    const std::string s = std::string(magic) + "\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    return {s.begin(), s.end()};
}

} // namespace

std::vector<std::uint8_t> encode_ppm(const Frame& frame) {
    auto out = header_bytes("P6", frame.width(), frame.height());
    const auto px = frame.pixels();
    out.insert(out.end(), px.begin(), px.end());
    return out;
}

Frame decode_ppm(std::span<const std::uint8_t> bytes, const std::string& source) {
    const Header h = parse_header(bytes, '6', source);
    const std::size_t need = static_cast<std::size_t>(h.width) * h.height * 3;
    const std::size_t have = bytes.size() - h.data_offset;
    if (have < need) {
        throw FormatError(source + ": truncated PPM, expected " + std::to_string(need) + " pixel bytes, found " +
                          std::to_string(have));
    }
    if (have > need) throw FormatError(source + ": trailing bytes after PPM pixel data");
    return Frame(h.width, h.height, std::vector<std::uint8_t>(bytes.begin() + h.data_offset, bytes.end()));
}

std::vector<std::uint8_t> encode_pgm(const SegmentationMask& mask) {
    auto out = header_bytes("P5", mask.width(), mask.height());
    for (auto b : mask.bits()) out.push_back(b ? 255 : 0);
    return out;
}

SegmentationMask decode_pgm(std::span<const std::uint8_t> bytes, const std::string& source) {
    const Header h = parse_header(bytes, '5', source);
    const std::size_t need = static_cast<std::size_t>(h.width) * h.height;
    const std::size_t have = bytes.size() - h.data_offset;
    if (have < need) {
        throw FormatError(source + ": truncated PGM, expected " + std::to_string(need) + " pixel bytes, found " +
                          std::to_string(have));
    }
    if (have > need) throw FormatError(source + ": trailing bytes after PGM pixel data");
    std::vector<std::uint8_t> bits(need);
    for (std::size_t i = 0; i < need; ++i) {
        const auto v = bytes[h.data_offset + i];
        if (v != 0 && v != 255) {
            throw FormatError(source + ": mask value " + std::to_string(v) + " at pixel " + std::to_string(i) +
                              " is neither 0 nor 255");
        }
        bits[i] = v ? 1 : 0;
    }
    return SegmentationMask(h.width, h.height, std::move(bits), 1.0);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string() + ": cannot open for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError(path.string() + ": read failed");
    return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(path.string() + ": write failed");
}

void write_ppm(const std::filesystem::path& path, const Frame& frame) { write_file(path, encode_ppm(frame)); }

Frame read_ppm(const std::filesystem::path& path) { return decode_ppm(read_file(path), path.string()); }

void write_pgm(const std::filesystem::path& path, const SegmentationMask& mask) {
    write_file(path, encode_pgm(mask));
}

SegmentationMask read_pgm(const std::filesystem::path& path) { return decode_pgm(read_file(path), path.string()); }

} // namespace sevo::pnm
