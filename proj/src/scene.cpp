#include "sevo/scene.hpp"

#include "sevo/error.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

namespace sevo {

std::string_view to_string(EnvClass env) {
    switch (env) {
    case EnvClass::train: return "train";
    case EnvClass::novel_similar: return "novel_similar";
    case EnvClass::novel_extreme: return "novel_extreme";
    }
    return "?";
}

EnvClass env_class_from_string(std::string_view name) {
    if (name == "train") return EnvClass::train;
    if (name == "novel_similar" || name == "novel-similar") return EnvClass::novel_similar;
    if (name == "novel_extreme" || name == "novel-extreme") return EnvClass::novel_extreme;
    throw InvalidArgument("unknown environment class '" + std::string(name) + "'");
}

namespace {

std::string fmt_double(double v) {
    char buf[32];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(n));
}

std::string fmt_rgb(Rgb c) {
    return std::to_string(c[0]) + " " + std::to_string(c[1]) + " " + std::to_string(c[2]);
}

const std::string& get(const std::map<std::string, std::string>& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("scene record is missing key '" + key + "'");
    return it->second;
}

double parse_double(const std::string& text, const std::string& key) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw FormatError("scene key '" + key + "': not a number: '" + text + "'");
    }
}

std::uint64_t parse_u64(const std::string& text, const std::string& key) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw FormatError("scene key '" + key + "': not an unsigned integer: '" + text + "'");
    }
    return v;
}

Rgb parse_rgb(const std::string& text, const std::string& key) {
    std::istringstream in(text);
    int r = -1, g = -1, b = -1;
    in >> r >> g >> b;
    if (!in || r < 0 || r > 255 || g < 0 || g > 255 || b < 0 || b > 255 || !(in >> std::ws).eof()) {
        throw FormatError("scene key '" + key + "': expected three 0-255 values, got '" + text + "'");
    }
    return {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)};
}

} // namespace

std::map<std::string, std::string> to_key_values(const SceneSpec& scene) {
    std::map<std::string, std::string> kv;
    kv["floor_tone"] = fmt_rgb(scene.floor_tone);
    kv["texture"] = std::to_string(scene.texture);
    kv["texture_amplitude"] = fmt_double(scene.texture_amplitude);
    kv["clutter.count"] = std::to_string(scene.clutter.size());
    for (std::size_t i = 0; i < scene.clutter.size(); ++i) {
        const auto& c = scene.clutter[i];
        const std::string p = "clutter." + std::to_string(i) + ".";
        kv[p + "x0"] = fmt_double(c.rect.x0);
        kv[p + "y0"] = fmt_double(c.rect.y0);
        kv[p + "x1"] = fmt_double(c.rect.x1);
        kv[p + "y1"] = fmt_double(c.rect.y1);
        kv[p + "color"] = fmt_rgb(c.color);
    }
    kv["distractors.count"] = std::to_string(scene.reflective_distractors.size());
    for (std::size_t i = 0; i < scene.reflective_distractors.size(); ++i) {
        const std::string p = "distractors." + std::to_string(i) + ".";
        kv[p + "x"] = fmt_double(scene.reflective_distractors[i].x);
        kv[p + "y"] = fmt_double(scene.reflective_distractors[i].y);
    }
    kv["bottle.present"] = scene.bottle ? "1" : "0";
    if (scene.bottle) {
        kv["bottle.x"] = fmt_double(scene.bottle->position.x);
        kv["bottle.y"] = fmt_double(scene.bottle->position.y);
        kv["bottle.translucency"] = fmt_double(scene.bottle->translucency);
        kv["bottle.tint"] = fmt_rgb(scene.bottle->tint);
        kv["bottle.radius"] = fmt_double(scene.bottle->radius);
    }
    kv["lighting.ambient"] =
        fmt_double(scene.lighting.ambient[0]) + " " + fmt_double(scene.lighting.ambient[1]) + " " +
        fmt_double(scene.lighting.ambient[2]);
    kv["lighting.led.present"] = scene.lighting.led ? "1" : "0";
    if (scene.lighting.led) {
        kv["lighting.led.power"] = fmt_double(scene.lighting.led->power);
        kv["lighting.led.mount"] = scene.lighting.led->mount == LedMount::arm_base ? "arm_base" : "overhead";
        kv["lighting.led.falloff_scale"] = fmt_double(scene.lighting.led->falloff_scale);
    }
    kv["rng_seed"] = std::to_string(scene.rng_seed);
    return kv;
}

SceneSpec scene_from_key_values(const std::map<std::string, std::string>& kv) {
    SceneSpec s;
    s.floor_tone = parse_rgb(get(kv, "floor_tone"), "floor_tone");
    s.texture = static_cast<int>(parse_u64(get(kv, "texture"), "texture"));
    if (s.texture >= kTextureCount) throw FormatError("scene texture id out of range");
    s.texture_amplitude = parse_double(get(kv, "texture_amplitude"), "texture_amplitude");
    const auto n_clutter = parse_u64(get(kv, "clutter.count"), "clutter.count");
    for (std::uint64_t i = 0; i < n_clutter; ++i) {
        const std::string p = "clutter." + std::to_string(i) + ".";
        ClutterItem c;
        c.rect = {parse_double(get(kv, p + "x0"), p + "x0"), parse_double(get(kv, p + "y0"), p + "y0"),
                  parse_double(get(kv, p + "x1"), p + "x1"), parse_double(get(kv, p + "y1"), p + "y1")};
        c.color = parse_rgb(get(kv, p + "color"), p + "color");
        s.clutter.push_back(c);
    }
    const auto n_distractors = parse_u64(get(kv, "distractors.count"), "distractors.count");
    for (std::uint64_t i = 0; i < n_distractors; ++i) {
        const std::string p = "distractors." + std::to_string(i) + ".";
        s.reflective_distractors.push_back(
            {parse_double(get(kv, p + "x"), p + "x"), parse_double(get(kv, p + "y"), p + "y")});
    }
    if (get(kv, "bottle.present") == "1") {
        BottleSpec b;
        b.position = {parse_double(get(kv, "bottle.x"), "bottle.x"), parse_double(get(kv, "bottle.y"), "bottle.y")};
        b.translucency = parse_double(get(kv, "bottle.translucency"), "bottle.translucency");
        b.tint = parse_rgb(get(kv, "bottle.tint"), "bottle.tint");
        b.radius = parse_double(get(kv, "bottle.radius"), "bottle.radius");
        s.bottle = b;
    }
    {
        std::istringstream in(get(kv, "lighting.ambient"));
        std::string a, b, c;
        in >> a >> b >> c;
        s.lighting.ambient = {parse_double(a, "lighting.ambient"), parse_double(b, "lighting.ambient"),
                              parse_double(c, "lighting.ambient")};
    }
    if (get(kv, "lighting.led.present") == "1") {
        LedSpec led;
        led.power = parse_double(get(kv, "lighting.led.power"), "lighting.led.power");
        const auto& mount = get(kv, "lighting.led.mount");
        if (mount == "arm_base") {
            led.mount = LedMount::arm_base;
        } else if (mount == "overhead") {
            led.mount = LedMount::overhead;
        } else {
            throw FormatError("scene key 'lighting.led.mount': unknown mount '" + mount + "'");
        }
        led.falloff_scale = parse_double(get(kv, "lighting.led.falloff_scale"), "lighting.led.falloff_scale");
        s.lighting.led = led;
    }
    s.rng_seed = parse_u64(get(kv, "rng_seed"), "rng_seed");
    return s;
}

} // namespace sevo
