#include "sevo/camera.hpp"

#include "sevo/error.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace sevo {

std::string_view to_string(CameraKind kind) {
    switch (kind) {
    case CameraKind::front: return "front";
    case CameraKind::side: return "side";
    case CameraKind::overhead: return "overhead";
    case CameraKind::wrist: return "wrist";
    }
    return "?";
}

CameraKind camera_kind_from_string(std::string_view name) {
    if (name == "front") return CameraKind::front;
    if (name == "side") return CameraKind::side;
    if (name == "overhead") return CameraKind::overhead;
    if (name == "wrist") return CameraKind::wrist;
    throw InvalidArgument("unknown camera kind '" + std::string(name) + "'");
}

CameraRig default_rig(bool with_wrist) {
    CameraRig rig;
    rig.cameras.push_back({CameraKind::front, {0.0, 0.0, kWorldSize, kWorldSize}, false, false});
    rig.cameras.push_back({CameraKind::side, {0.0, 0.0, kWorldSize, kWorldSize}, true, false});
    if (with_wrist) rig.cameras.push_back({CameraKind::wrist, {}, false, false});
    return rig;
}

Vec2 CameraView::pixel_to_world(int px, int py) const {
    double u = (px + 0.5) / width;
    double v = (py + 0.5) / height;
    if (flip_x) u = 1.0 - u;
    if (flip_y) v = 1.0 - v;
    return {window.x0 + u * window.width(), window.y0 + v * window.height()};
}

Vec2 CameraView::world_to_pixel(Vec2 p) const {
    double u = (p.x - window.x0) / window.width();
    double v = (p.y - window.y0) / window.height();
    if (flip_x) u = 1.0 - u;
    if (flip_y) v = 1.0 - v;
    return {u * width - 0.5, v * height - 0.5};
}

double wrist_half_extent(std::optional<double> distance_to_bottle) {
    constexpr double kNear = 2.0;
    constexpr double kFar = 16.0;
    if (!distance_to_bottle) return kFar;
    return std::clamp(kNear + 0.5 * *distance_to_bottle, kNear, kFar);
}

CameraView resolve_view(const CameraSpec& camera, Vec2 gripper, std::optional<Vec2> bottle) {
    CameraView view;
    view.flip_x = camera.flip_x;
    view.flip_y = camera.flip_y;
    if (camera.kind != CameraKind::wrist) {
        view.window = camera.window;
        return view;
    }
    std::optional<double> d;
    if (bottle) d = distance(gripper, *bottle);
    const double h = wrist_half_extent(d);
    view.window = {gripper.x - h, gripper.y - h, gripper.x + h, gripper.y + h};
    return view;
}

bool coverage_check(const CameraRig& rig) {
    const Rect workspace{0.0, 0.0, kWorldSize, kWorldSize};
    std::vector<Rect> windows;
    for (const auto& cam : rig.cameras) {
        if (!is_body_fixed(cam.kind)) continue;
        const Rect w = cam.window;
        Rect clipped{std::max(w.x0, workspace.x0), std::max(w.y0, workspace.y0), std::min(w.x1, workspace.x1),
                     std::min(w.y1, workspace.y1)};
        if (clipped.area() > 0.0) windows.push_back(clipped);
    }
    if (windows.empty()) return false;
    // Exact rectangle-union test: split the workspace on every window edge and
    // require each elementary cell to lie inside some window.
    std::set<double> xs{workspace.x0, workspace.x1};
    std::set<double> ys{workspace.y0, workspace.y1};
    for (const auto& w : windows) {
        xs.insert(w.x0);
        xs.insert(w.x1);
        ys.insert(w.y0);
        ys.insert(w.y1);
    }
    const std::vector<double> xv(xs.begin(), xs.end());
    const std::vector<double> yv(ys.begin(), ys.end());
    for (std::size_t i = 0; i + 1 < xv.size(); ++i) {
        for (std::size_t j = 0; j + 1 < yv.size(); ++j) {
            const Vec2 mid{0.5 * (xv[i] + xv[i + 1]), 0.5 * (yv[j] + yv[j + 1])};
            const bool covered =
                std::any_of(windows.begin(), windows.end(), [&](const Rect& w) { return w.contains(mid); });
            if (!covered) return false;
        }
    }
    return true;
}

} // namespace sevo
