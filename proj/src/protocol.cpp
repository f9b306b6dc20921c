#include "sevo/episode.hpp"
#include "sevo/error.hpp"
#include "sevo/protocol.hpp"

namespace sevo {

std::string ProtocolFlags::label() const {
    std::string out;
    auto add = [&](bool on, const char* name) {
        if (!on) return;
        if (!out.empty()) out += '+';
        out += name;
    };
    add(overlay, "overlay");
    add(red_light, "red_light");
    add(varied_bg, "varied_bg");
    add(wrist_camera, "wrist");
    if (out.empty()) out = "baseline";
    if (!null_episodes) out += "-no_null";
    return out;
}

void EpisodeRecord::validate() const {
    const std::size_t cams = meta.rig.cameras.size();
    if (cams == 0) throw ShapeError("episode " + meta.id + " has no cameras");
    if (meta.action_dim != kActionDim) throw ShapeError("episode " + meta.id + " has action_dim != 3");
    int w = -1;
    int h = -1;
    for (std::size_t t = 0; t < steps.size(); ++t) {
        const auto& s = steps[t];
        const std::string where = "episode " + meta.id + " step " + std::to_string(t);
        if (s.raw.size() != cams || s.masks.size() != cams || s.sevo.size() != cams) {
            throw ShapeError(where + ": expected " + std::to_string(cams) + " frames, masks and SEVO frames");
        }
        for (std::size_t c = 0; c < cams; ++c) {
            if (w < 0) {
                w = s.raw[c].width();
                h = s.raw[c].height();
            }
            auto same = [&](int ww, int hh) { return ww == w && hh == h; };
            if (!same(s.raw[c].width(), s.raw[c].height()) || !same(s.masks[c].width(), s.masks[c].height()) ||
                !same(s.sevo[c].width(), s.sevo[c].height())) {
                throw ShapeError(where + " camera " + std::to_string(c) + ": dimension mismatch");
            }
        }
    }
}

} // namespace sevo
