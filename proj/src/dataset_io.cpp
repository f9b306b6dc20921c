#include "sevo/dataset_io.hpp"

#include "sevo/error.hpp"
#include "sevo/pnm.hpp"

#include <json.hpp>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace sevo::dataset {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string frame_name(std::size_t cam, std::size_t t, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "cam%02zu_t%04zu.%s", cam, t, ext);
    return buf;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& s, const fs::path& file, std::size_t line) {
    const char* begin = s.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    if (s.empty() || end != begin + s.size() || errno == ERANGE) {
        throw FormatError(file.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
    }
    return v;
}

json flags_json(const ProtocolFlags& f) {
    return {{"overlay", f.overlay},
            {"red_light", f.red_light},
            {"varied_bg", f.varied_bg},
            {"null_episodes", f.null_episodes},
            {"wrist_camera", f.wrist_camera}};
}

json camera_json(const CameraSpec& c) {
    return {{"kind", std::string(to_string(c.kind))},
            {"window", {c.window.x0, c.window.y0, c.window.x1, c.window.y1}},
            {"flip_x", c.flip_x},
            {"flip_y", c.flip_y}};
}

void write_traj(const EpisodeRecord& rec, const fs::path& path) {
    const std::size_t dof = rec.steps.empty() ? 3 : rec.steps.front().joints.joints.size();
    std::string out = "t";
    for (std::size_t i = 0; i < dof; ++i) out += ",q" + std::to_string(i);
    out += ",a0,a1,a2,gate_phase\n";
    for (std::size_t t = 0; t < rec.steps.size(); ++t) {
        const auto& s = rec.steps[t];
        if (s.joints.joints.size() != dof) throw ShapeError("joint count changes within episode " + rec.meta.id);
        out += std::to_string(t);
        for (double q : s.joints.joints) out += "," + fmt_double(q);
        out += "," + fmt_double(s.action.dx) + "," + fmt_double(s.action.dy) + "," + fmt_double(s.action.grip_cmd);
        out += ",";
        out += to_string(s.phase);
        out += "\n";
    }
    pnm::write_file(path, std::vector<std::uint8_t>(out.begin(), out.end()));
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, sep)) parts.push_back(cur);
    if (!line.empty() && line.back() == sep) parts.emplace_back();
    return parts;
}

template <typename T>
T field(const json& j, const char* key, const fs::path& file) {
    if (!j.contains(key)) throw FormatError(file.string() + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw FormatError(file.string() + ": field '" + key + "': " + e.what());
    }
}

std::size_t count_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw FormatError(dir.string() + ": missing directory");
    return static_cast<std::size_t>(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}));
}

} // namespace

std::string episode_dir_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "ep_%04zu", index);
    return buf;
}

fs::path write_episode(const EpisodeRecord& record, const fs::path& directory) {
    record.validate();
    std::error_code ec;
    for (const char* sub : {"frames", "masks", "sevo"}) {
        fs::create_directories(directory / sub, ec);
        if (ec) throw IoError((directory / sub).string() + ": " + ec.message());
    }
    const auto& m = record.meta;
    json scene = json::object();
    for (const auto& [k, v] : to_key_values(m.scene)) scene[k] = v;
    json cams = json::array();
    for (const auto& c : m.rig.cameras) cams.push_back(camera_json(c));
    // nlohmann's default object type is an ordered std::map, so keys come out sorted.
    json meta = {{"id", m.id},
                 {"flags", flags_json(m.flags)},
                 {"scene", scene},
                 {"cameras", cams},
                 {"frame_rate", m.frame_rate},
                 {"action_dim", m.action_dim},
                 {"steps", record.steps.size()}};
    const std::string text = meta.dump(2) + "\n";
    const fs::path meta_path = directory / "meta.json";
    pnm::write_file(meta_path, std::vector<std::uint8_t>(text.begin(), text.end()));
    write_traj(record, directory / "traj.csv");
    for (std::size_t t = 0; t < record.steps.size(); ++t) {
        const auto& s = record.steps[t];
        for (std::size_t c = 0; c < s.raw.size(); ++c) {
            pnm::write_ppm(directory / "frames" / frame_name(c, t, "ppm"), s.raw[c]);
            pnm::write_pgm(directory / "masks" / frame_name(c, t, "pgm"), s.masks[c]);
            pnm::write_ppm(directory / "sevo" / frame_name(c, t, "ppm"), s.sevo[c]);
        }
    }
    return meta_path;
}

EpisodeRecord read_episode(const fs::path& directory) {
    const fs::path meta_path = directory / "meta.json";
    const auto bytes = pnm::read_file(meta_path);
    json meta;
    try {
        meta = json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception& e) {
        throw FormatError(meta_path.string() + ": " + e.what());
    }
    if (!meta.is_object()) throw FormatError(meta_path.string() + ": top level must be an object");

    EpisodeRecord rec;
    auto& m = rec.meta;
    m.id = field<std::string>(meta, "id", meta_path);
    const json flags = field<json>(meta, "flags", meta_path);
    m.flags.overlay = field<bool>(flags, "overlay", meta_path);
    m.flags.red_light = field<bool>(flags, "red_light", meta_path);
    m.flags.varied_bg = field<bool>(flags, "varied_bg", meta_path);
    m.flags.null_episodes = field<bool>(flags, "null_episodes", meta_path);
    m.flags.wrist_camera = field<bool>(flags, "wrist_camera", meta_path);
    std::map<std::string, std::string> kv;
    const auto scene = field<json>(meta, "scene", meta_path);
    if (!scene.is_object()) throw FormatError(meta_path.string() + ": scene must be an object");
    for (const auto& [k, v] : scene.items()) {
        if (!v.is_string()) throw FormatError(meta_path.string() + ": scene." + k + " must be a string");
        kv[k] = v.get<std::string>();
    }
    try {
        m.scene = scene_from_key_values(kv);
    } catch (const Error& e) {
        throw FormatError(meta_path.string() + ": " + e.what());
    }
    for (const auto& c : field<json>(meta, "cameras", meta_path)) {
        CameraSpec spec;
        try {
            spec.kind = camera_kind_from_string(field<std::string>(c, "kind", meta_path));
        } catch (const InvalidArgument& e) {
            throw FormatError(meta_path.string() + ": " + e.what());
        }
        const auto w = field<std::vector<double>>(c, "window", meta_path);
        if (w.size() != 4) throw FormatError(meta_path.string() + ": camera window needs 4 numbers");
        spec.window = Rect{w[0], w[1], w[2], w[3]};
        spec.flip_x = field<bool>(c, "flip_x", meta_path);
        spec.flip_y = field<bool>(c, "flip_y", meta_path);
        m.rig.cameras.push_back(spec);
    }
    m.frame_rate = field<double>(meta, "frame_rate", meta_path);
    m.action_dim = field<int>(meta, "action_dim", meta_path);
    const auto n_steps = field<std::size_t>(meta, "steps", meta_path);
    const std::size_t cams = m.rig.cameras.size();
    if (cams == 0) throw FormatError(meta_path.string() + ": no cameras");

    for (const char* sub : {"frames", "masks", "sevo"}) {
        const auto found = count_files(directory / sub);
        if (found != n_steps * cams) {
            throw FormatError((directory / sub).string() + ": expected " + std::to_string(n_steps * cams) +
                              " files for " + std::to_string(n_steps) + " steps, found " + std::to_string(found));
        }
    }

    const fs::path traj_path = directory / "traj.csv";
    const auto traj_bytes = pnm::read_file(traj_path);
    const std::string traj(traj_bytes.begin(), traj_bytes.end());
    std::istringstream lines(traj);
    std::string line;
    if (!std::getline(lines, line)) throw FormatError(traj_path.string() + ": empty file");
    const auto header = split(line, ',');
    if (header.size() < 5 || header.front() != "t" || header.back() != "gate_phase") {
        throw FormatError(traj_path.string() + ": bad header");
    }
    const std::size_t dof = header.size() - 5;
    for (std::size_t i = 0; i < dof; ++i) {
        if (header[1 + i] != "q" + std::to_string(i)) throw FormatError(traj_path.string() + ": bad header");
    }
    std::size_t row = 0;
    while (std::getline(lines, line)) {
        const std::size_t lineno = row + 2;
        const auto parts = split(line, ',');
        if (parts.size() != header.size()) {
            throw FormatError(traj_path.string() + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(header.size()) + " columns");
        }
        if (parts[0] != std::to_string(row)) {
            throw FormatError(traj_path.string() + ":" + std::to_string(lineno) + ": step index out of order");
        }
        if (row >= n_steps) throw FormatError(traj_path.string() + ": more rows than meta.json steps");
        EpisodeStep s;
        for (std::size_t i = 0; i < dof; ++i) s.joints.joints.push_back(parse_double(parts[1 + i], traj_path, lineno));
        s.action.dx = parse_double(parts[1 + dof], traj_path, lineno);
        s.action.dy = parse_double(parts[2 + dof], traj_path, lineno);
        s.action.grip_cmd = parse_double(parts[3 + dof], traj_path, lineno);
        try {
            s.phase = gate_phase_from_string(parts[4 + dof]);
        } catch (const Error& e) {
            throw FormatError(traj_path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        for (std::size_t c = 0; c < cams; ++c) {
            s.raw.push_back(pnm::read_ppm(directory / "frames" / frame_name(c, row, "ppm")));
            s.masks.push_back(pnm::read_pgm(directory / "masks" / frame_name(c, row, "pgm")));
            s.sevo.push_back(pnm::read_ppm(directory / "sevo" / frame_name(c, row, "ppm")));
        }
        rec.steps.push_back(std::move(s));
        ++row;
    }
    if (row != n_steps) {
        throw FormatError(traj_path.string() + ": " + std::to_string(row) + " rows but meta.json declares " +
                          std::to_string(n_steps) + " steps");
    }
    try {
        rec.validate();
    } catch (const ShapeError& e) {
        throw FormatError(directory.string() + ": " + e.what());
    }
    return rec;
}

void write_dataset(const std::vector<EpisodeRecord>& episodes, const fs::path& directory) {
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (ec) throw IoError(directory.string() + ": " + ec.message());
    for (std::size_t i = 0; i < episodes.size(); ++i) write_episode(episodes[i], directory / episode_dir_name(i));
}

std::vector<EpisodeRecord> read_dataset(const fs::path& directory) {
    if (!fs::is_directory(directory)) throw FormatError(directory.string() + ": not a dataset directory");
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(directory)) {
        const auto name = e.path().filename().string();
        if (e.is_directory() && name.rfind("ep_", 0) == 0) dirs.push_back(e.path());
    }
    std::sort(dirs.begin(), dirs.end());
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        if (dirs[i].filename() != episode_dir_name(i)) {
            throw FormatError(directory.string() + ": episode directories are not numbered contiguously (expected " +
                              episode_dir_name(i) + ")");
        }
    }
    std::vector<EpisodeRecord> out;
    out.reserve(dirs.size());
    for (const auto& d : dirs) out.push_back(read_episode(d));
    return out;
}

} // namespace sevo::dataset
