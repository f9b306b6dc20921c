#include "sevo/sim_env.hpp"

#include "sevo/error.hpp"

#include <algorithm>
#include <cstdlib>
#include <array>
#include <cmath>
#include <numbers>

namespace sevo {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

// Diffuse response of the floor to the red LED addend.
constexpr double kLedDiffuse = 0.45;
// Specular highlight color weights (red LED reflected with a little white).
constexpr std::array<double, 3> kHighlightWeights{1.0, 0.55, 0.55};
// The lit bottle body picks up much more red than the matte floor does.
constexpr double kLedGlow = 6.0;

constexpr double kSceneBottleRadius = 4.5;
constexpr double kExtremeMinAmbient = 0.85;
constexpr double kSceneBottleTranslucency = 0.55;

constexpr std::array<Rgb, 4> kClutterPaletteTrain{{{90, 60, 40}, {40, 70, 45}, {75, 75, 88}, {112, 96, 70}}};
constexpr std::array<Rgb, 4> kClutterPaletteNovel{{{62, 48, 112}, {38, 92, 122}, {124, 48, 60}, {102, 112, 40}}};

constexpr Rgb kGripperColor{205, 205, 205};
constexpr double kGripperArm = 2.0;
constexpr double kGripperThickness = 0.6;

constexpr double kDistractorBrightening = 0.25;
constexpr Rgb kDistractorTint{12, 12, 12};

double texture_pattern(int texture, Vec2 p) {
    switch (texture) {
    case 0: return 0.0;
    case 1: return std::sin(kTau * p.y / 8.0);
    case 2: return std::sin(kTau * p.x / 10.0) * std::sin(kTau * p.y / 10.0);
    case 3: return std::sin(kTau * p.x / 6.0);
    case 4: return std::sin(kTau * (p.x + p.y) / 9.0);
    case 5: return std::sin(kTau * p.x / 13.0 + 1.3) * std::cos(kTau * p.y / 7.0);
    default: return 0.0;
    }
}

// Albedo of the static layers at a world point: floor, clutter, reflective
// distractors.
std::array<double, 3> static_albedo(const SceneSpec& scene, Vec2 p) {
    const double t = scene.texture_amplitude * texture_pattern(scene.texture, p);
    std::array<double, 3> c{scene.floor_tone[0] + t, scene.floor_tone[1] + t, scene.floor_tone[2] + t};
    for (const auto& item : scene.clutter) {
        if (item.rect.contains(p)) c = {double(item.color[0]), double(item.color[1]), double(item.color[2])};
    }
    for (const auto& d : scene.reflective_distractors) {
        if (distance(d, p) <= kDistractorRadius) {
            for (int k = 0; k < 3; ++k) {
                c[k] = (1.0 - kDistractorBrightening) * c[k] + kDistractorBrightening * kDistractorTint[k];
            }
        }
    }
    return c;
}

// Lit static layer, unquantized. Lighting is affine per channel, so compositing
// the bottle over lit values equals lighting the composited albedo.
std::vector<float> static_layer(const SceneSpec& scene, const CameraView& view) {
    const auto amb = effective_ambient(scene.lighting);
    std::vector<float> out(static_cast<std::size_t>(view.width) * view.height * 3);
    for (int py = 0; py < view.height; ++py) {
        for (int px = 0; px < view.width; ++px) {
            const Vec2 p = view.pixel_to_world(px, py);
            const auto a = static_albedo(scene, p);
            float* o = &out[(static_cast<std::size_t>(py) * view.width + px) * 3];
            double led = 0.0;
            if (scene.lighting.led) {
                led = kLedDiffuse * led_contribution(*scene.lighting.led, led_distance(*scene.lighting.led, p))[0];
            }
            o[0] = static_cast<float>(a[0] * amb[0] + led);
            o[1] = static_cast<float>(a[1] * amb[1]);
            o[2] = static_cast<float>(a[2] * amb[2]);
        }
    }
    return out;
}

bool on_gripper(Vec2 gripper, Vec2 p) {
    const Vec2 d = p - gripper;
    const bool horizontal = std::abs(d.y) <= kGripperThickness && std::abs(d.x) <= kGripperArm;
    const bool vertical = std::abs(d.x) <= kGripperThickness && std::abs(d.y) <= kGripperArm;
    return horizontal || vertical;
}

std::uint8_t quantize(double v) {
    const double r = std::round(v);
    if (r <= 0.0) return 0;
    if (r >= 255.0) return 255;
    return static_cast<std::uint8_t>(r);
}

// Dynamic layers on top of a lit static layer: bottle, specular highlight,
// gripper. Also produces the ground-truth mask.
RenderResult finish(const std::vector<float>& base, const SceneSpec& scene, std::optional<Vec2> bottle_pos,
                    Vec2 gripper, double grip, const CameraView& view) {
    const auto amb = effective_ambient(scene.lighting);
    RenderResult r{Frame(view.width, view.height), SegmentationMask(view.width, view.height, 1.0)};
    std::optional<SpecularAnchor> anchor;
    if (scene.bottle && bottle_pos) anchor = specular_anchor(scene.lighting.led, *bottle_pos);
    // Gripper brightness drops as the fingers close so the aperture is visible.
    const double grip_shade = 0.6 + 0.4 * std::clamp(grip, 0.0, 1.0);
    auto px = r.frame.pixels();
    for (int py = 0; py < view.height; ++py) {
        for (int pxi = 0; pxi < view.width; ++pxi) {
            const std::size_t idx = static_cast<std::size_t>(py) * view.width + pxi;
            const Vec2 p = view.pixel_to_world(pxi, py);
            std::array<double, 3> c{base[3 * idx], base[3 * idx + 1], base[3 * idx + 2]};
            if (scene.bottle && bottle_pos && distance(*bottle_pos, p) <= scene.bottle->radius) {
                const double a = scene.bottle->translucency;
                double led = 0.0;
                if (scene.lighting.led) {
                    led = kLedDiffuse * led_contribution(*scene.lighting.led, led_distance(*scene.lighting.led, p))[0];
                }
                for (int k = 0; k < 3; ++k) {
                    const double lit_tint = scene.bottle->tint[k] * amb[k] + (k == 0 ? kLedGlow * led : 0.0);
                    c[k] = (1.0 - a) * c[k] + a * lit_tint;
                }
                r.truth.set(pxi, py, true);
                if (anchor && distance(anchor->center, p) <= anchor->radius) {
                    for (int k = 0; k < 3; ++k) c[k] += kHighlightWeights[k] * anchor->intensity;
                }
            }
            if (on_gripper(gripper, p)) {
                for (int k = 0; k < 3; ++k) c[k] = kGripperColor[k] * grip_shade * amb[k];
            }
            px[3 * idx] = quantize(c[0]);
            px[3 * idx + 1] = quantize(c[1]);
            px[3 * idx + 2] = quantize(c[2]);
        }
    }
    if (r.truth.area() == 0) r.truth.set_confidence(0.0);
    return r;
}

Lighting varied_lighting(double preset_u, const std::array<double, 3>& jitter) {
    Lighting l;
    const int preset = std::min(4, static_cast<int>(preset_u * 5.0));
    const double u = jitter[0];
    switch (preset) {
    case 0: {
        const double g = 0.85 + 0.15 * u;
        l.ambient = {g, g, g};
        break;
    }
    case 1: {
        const double g = 0.5 + 0.15 * u;
        l.ambient = {g, g, g};
        break;
    }
    case 2: {
        const double g = 0.2 + 0.1 * u;
        l.ambient = {g, g, g};
        break;
    }
    case 3: {
        const double g = 0.8 + 0.2 * u;
        l.ambient = {g, 0.85 * g, 0.65 * g};
        break;
    }
    default: {
        const double g = 0.8 + 0.2 * u;
        l.ambient = {0.75 * g, 0.85 * g, g};
        break;
    }
    }
    // Small per-channel drift on top of the preset.
    for (int k = 0; k < 3; ++k) l.ambient[k] = std::clamp(l.ambient[k] * (0.95 + 0.1 * jitter[1 + (k % 2)]), 0.0, 1.0);
    return l;
}

} // namespace

SceneSpec EnvState::current_scene() const {
    SceneSpec s = scene;
    if (s.bottle && bottle) s.bottle->position = *bottle;
    return s;
}

EnvState initial_state(const SceneSpec& scene) {
    EnvState s;
    s.scene = scene;
    if (scene.bottle) s.bottle = scene.bottle->position;
    return s;
}

SceneSpec canonical_background() {
    SceneSpec s;
    s.floor_tone = {52, 48, 44};
    s.texture = 1;
    s.texture_amplitude = 8.0;
    s.clutter = {
        {{4.0, 4.0, 14.0, 10.0}, kClutterPaletteTrain[0]},
        {{48.0, 50.0, 56.0, 60.0}, kClutterPaletteTrain[1]},
        {{14.0, 54.0, 22.0, 60.0}, kClutterPaletteTrain[2]},
    };
    s.lighting.ambient = {0.95, 0.95, 0.95};
    return s;
}

SceneSpec sample_scene(EnvClass env, const ProtocolFlags& protocol, Rng& rng, bool null_scene) {
    // Fixed draw order; every value is drawn whether or not it is used.
    const double lum_u = rng.uniform();
    std::array<double, 3> tint_offset{};
    for (auto& t : tint_offset) t = rng.uniform(-8.0, 8.0);
    const double texture_u = rng.uniform();
    const double amplitude = rng.uniform(4.0, 14.0);
    const auto clutter_count = rng.uniform_int(0, 6);
    struct ClutterDraw {
        double x, y, w, h, color_u;
    };
    std::array<ClutterDraw, 6> clutter_draws{};
    for (auto& c : clutter_draws) {
        c = {rng.uniform(0.0, 60.0), rng.uniform(0.0, 60.0), rng.uniform(4.0, 12.0), rng.uniform(4.0, 12.0),
             rng.uniform()};
    }
    const auto distractor_count = rng.uniform_int(0, 2);
    std::array<std::pair<double, double>, 2> distractor_draws{};
    for (auto& d : distractor_draws) d = {rng.uniform(0.0, 2.0 * std::numbers::pi), rng.uniform(9.0, 20.0)};
    const Vec2 bottle_pos{rng.uniform(kBottleRegion.x0, kBottleRegion.x1), rng.uniform(kBottleRegion.y0, kBottleRegion.y1)};
    const auto tint_level = static_cast<std::uint8_t>(rng.uniform_int(0, 20));
    const double lighting_u = rng.uniform();
    std::array<double, 3> lighting_jitter{rng.uniform(), rng.uniform(), rng.uniform()};
    const std::uint64_t scene_seed = rng.next_u64();

    SceneSpec s;
    const bool fixed_background = env == EnvClass::train && !protocol.varied_bg;
    if (fixed_background) {
        s = canonical_background();
    } else {
        double lum = 0.0;
        int texture = 0;
        const auto* palette = &kClutterPaletteTrain;
        switch (env) {
        case EnvClass::train:
            lum = 20.0 + 70.0 * lum_u;
            texture = std::min(kTrainTextureCount - 1, static_cast<int>(texture_u * kTrainTextureCount));
            break;
        case EnvClass::novel_similar:
            lum = 20.0 + 70.0 * lum_u;
            texture = kTrainTextureCount +
                      std::min(kTextureCount - kTrainTextureCount - 1,
                               static_cast<int>(texture_u * (kTextureCount - kTrainTextureCount)));
            palette = &kClutterPaletteNovel;
            break;
        case EnvClass::novel_extreme:
            lum = 200.0 + 55.0 * lum_u;
            texture = std::min(kTextureCount - 1, static_cast<int>(texture_u * kTextureCount));
            palette = &kClutterPaletteNovel;
            break;
        }
        // The bright room stays bright in every channel.
        const double floor_min = env == EnvClass::novel_extreme ? 200.0 : 0.0;
        for (int k = 0; k < 3; ++k) {
            s.floor_tone[k] = static_cast<std::uint8_t>(std::clamp(std::round(lum + tint_offset[k]), floor_min, 255.0));
        }
        s.texture = texture;
        s.texture_amplitude = amplitude;
        for (std::int64_t i = 0; i < clutter_count; ++i) {
            const auto& d = clutter_draws[static_cast<std::size_t>(i)];
            const auto color_idx = std::min<std::size_t>(palette->size() - 1,
                                                         static_cast<std::size_t>(d.color_u * palette->size()));
            s.clutter.push_back({{d.x, d.y, std::min(kWorldSize, d.x + d.w), std::min(kWorldSize, d.y + d.h)},
                                 (*palette)[color_idx]});
        }
        s.lighting = varied_lighting(lighting_u, lighting_jitter);
        if (env == EnvClass::novel_extreme) {
            // The bright room is also brightly lit.
            for (auto& g : s.lighting.ambient) g = std::max(g, kExtremeMinAmbient);
        }
    }
    for (std::int64_t i = 0; i < distractor_count; ++i) {
        const auto [angle, radius] = distractor_draws[static_cast<std::size_t>(i)];
        const Vec2 p{std::clamp(bottle_pos.x + radius * std::cos(angle), 4.0, kWorldSize - 4.0),
                     std::clamp(bottle_pos.y + radius * std::sin(angle), 4.0, kWorldSize - 4.0)};
        s.reflective_distractors.push_back(p);
    }
    if (!null_scene) {
        BottleSpec b;
        b.position = bottle_pos;
        b.tint = {tint_level, tint_level, tint_level};
        b.radius = kSceneBottleRadius;
        b.translucency = kSceneBottleTranslucency;
        s.bottle = b;
    }
    if (protocol.red_light) s.lighting.led = LedSpec{};
    s.rng_seed = scene_seed;
    return s;
}

CameraView view_for(const EnvState& state, const CameraRig& rig, CameraId camera) {
    if (camera < 0 || static_cast<std::size_t>(camera) >= rig.cameras.size()) {
        throw InvalidArgument("camera " + std::to_string(camera) + " is not in the rig (" +
                              std::to_string(rig.cameras.size()) + " cameras)");
    }
    return resolve_view(rig.cameras[static_cast<std::size_t>(camera)], state.gripper, state.bottle);
}

RenderResult render_view(const SceneSpec& scene, Vec2 gripper, double grip, const CameraView& view) {
    std::optional<Vec2> bottle;
    if (scene.bottle) bottle = scene.bottle->position;
    return finish(static_layer(scene, view), scene, bottle, gripper, grip, view);
}

RenderResult render(const EnvState& state, const CameraRig& rig, CameraId camera) {
    const auto view = view_for(state, rig, camera);
    return finish(static_layer(state.scene, view), state.scene, state.bottle, state.gripper, state.grip, view);
}

Renderer::Renderer(const SceneSpec& scene, CameraRig rig) : scene_(scene), rig_(std::move(rig)) {
    static_layers_.resize(rig_.cameras.size());
    for (std::size_t i = 0; i < rig_.cameras.size(); ++i) {
        const auto& cam = rig_.cameras[i];
        if (is_body_fixed(cam.kind)) static_layers_[i] = static_layer(scene_, resolve_view(cam, {}, std::nullopt));
    }
}

RenderResult Renderer::render(const EnvState& state, CameraId camera) {
    const auto view = view_for(state, rig_, camera);
    const auto& cached = static_layers_[static_cast<std::size_t>(camera)];
    if (cached.empty()) {
        return finish(static_layer(scene_, view), scene_, state.bottle, state.gripper, state.grip, view);
    }
    return finish(cached, scene_, state.bottle, state.gripper, state.grip, view);
}

namespace {

bool inside_disc(Vec2 center, double radius, Vec2 p) { return distance(center, p) <= radius; }

SegmentationMask disc_mask(Vec2 center, double radius, const CameraView& view) {
    SegmentationMask m(view.width, view.height, 1.0);
    for (int py = 0; py < view.height; ++py) {
        for (int px = 0; px < view.width; ++px) {
            if (inside_disc(center, radius, view.pixel_to_world(px, py))) m.set(px, py, true);
        }
    }
    if (m.area() == 0) m.set_confidence(0.0);
    return m;
}

} // namespace

SegmentationMask bottle_mask(const SceneSpec& scene, const CameraView& view) {
    if (!scene.bottle) return SegmentationMask(view.width, view.height, 0.0);
    return disc_mask(scene.bottle->position, scene.bottle->radius, view);
}

SegmentationMask distractor_mask(const SceneSpec& scene, std::size_t index, const CameraView& view) {
    if (index >= scene.reflective_distractors.size()) throw InvalidArgument("distractor index out of range");
    return disc_mask(scene.reflective_distractors[index], kDistractorRadius, view);
}

EnvState step(const EnvState& state, const Action& action) {
    auto clamp_delta = [](double d) { return std::isfinite(d) ? std::clamp(d, -kMaxStepDelta, kMaxStepDelta) : 0.0; };
    EnvState next = state;
    const Vec2 target{std::clamp(state.gripper.x + clamp_delta(action.dx), 0.0, kWorldSize),
                      std::clamp(state.gripper.y + clamp_delta(action.dy), 0.0, kWorldSize)};
    const Vec2 moved = target - state.gripper;
    next.gripper = target;
    if (state.holding && next.bottle) *next.bottle = *next.bottle + moved;
    const double cmd = std::isfinite(action.grip_cmd) ? std::clamp(action.grip_cmd, 0.0, 1.0) : state.grip;
    next.grip = state.grip + std::clamp(cmd - state.grip, -kGripRate, kGripRate);
    next.holding = next.bottle.has_value() && next.grip <= kGripClosed &&
                   distance(next.gripper, *next.bottle) <= kGraspRadius;
    next.t = state.t + 1;
    return next;
}

std::string_view to_string(Outcome outcome) {
    switch (outcome) {
    case Outcome::success: return "success";
    case Outcome::miss: return "miss";
    case Outcome::false_trigger: return "false_trigger";
    case Outcome::timeout: return "timeout";
    }
    return "?";
}

OutcomeTracker::OutcomeTracker(const EnvState& initial, int max_steps)
    : null_scene_(!initial.bottle.has_value()), max_steps_(max_steps), previous_(initial) {
    if (initial.bottle) bottle_start_ = *initial.bottle;
}

bool OutcomeTracker::observe(const EnvState& state) {
    if (decided_) return true;
    if (state.t > max_steps_) {
        decided_ = Outcome::timeout;
        return true;
    }
    if (null_scene_) {
        if (state.gripper != previous_.gripper) decided_ = Outcome::false_trigger;
    } else {
        if (previous_.grip > kGripClosed && state.grip <= kGripClosed && !state.holding) ++closures_;
        if (state.holding && state.bottle && bottle_start_.x - state.bottle->x >= kRequiredDrag) {
            decided_ = Outcome::success;
        } else if (closures_ >= kMissClosures) {
            decided_ = Outcome::miss;
        }
    }
    previous_ = state;
    if (!decided_ && state.t >= max_steps_) decided_ = Outcome::timeout;
    return decided_.has_value();
}

Outcome OutcomeTracker::outcome() const { return decided_.value_or(Outcome::timeout); }

Outcome grasp_outcome(const std::vector<EnvState>& trajectory, int max_steps) {
    if (trajectory.empty()) return Outcome::timeout;
    OutcomeTracker tracker(trajectory.front(), max_steps);
    for (std::size_t i = 1; i < trajectory.size(); ++i) {
        if (tracker.observe(trajectory[i])) break;
    }
    return tracker.outcome();
}

Action oracle_action(const EnvState& state) {
    constexpr double kArrive = 2.0;
    constexpr double kDragDistance = 12.0;
    Action a{0.0, 0.0, state.grip};
    if (!state.bottle) return a;
    if (state.holding) {
        const double dragged = state.scene.bottle ? state.scene.bottle->position.x - state.bottle->x : 0.0;
        a.grip_cmd = 0.0;
        if (dragged < kDragDistance) a.dx = -std::min(kMaxStepDelta, kDragDistance - dragged);
        return a;
    }
    const Vec2 diff = *state.bottle - state.gripper;
    const double largest = std::max(std::abs(diff.x), std::abs(diff.y));
    const double scale = largest > kMaxStepDelta ? kMaxStepDelta / largest : 1.0;
    a.dx = scale * diff.x;
    a.dy = scale * diff.y;
    a.grip_cmd = diff.norm() <= kArrive ? 0.0 : 1.0;
    return a;
}

EpisodeRecord oracle_demonstrate(const SceneSpec& scene, const GateConfig& gate_config, const ProtocolFlags& protocol,
                                 Rng& rng, const DemoOptions& options) {
    EpisodeRecord rec;
    rec.meta.flags = protocol;
    rec.meta.scene = scene;
    rec.meta.rig = options.rig;
    rec.meta.frame_rate = gate_config.frame_rate;
    rec.meta.action_dim = kActionDim;

    const DetectorNoise noise = options.noise.with_led(scene.lighting.led.has_value());
    SafetyGate gate(gate_config);
    Renderer renderer(scene, options.rig);
    EnvState state = initial_state(scene);
    OutcomeTracker tracker(state, options.max_steps);
    const int cameras = static_cast<int>(options.rig.cameras.size());
    const int limit = scene.bottle ? options.max_steps : std::min(options.max_steps, options.null_steps);
    int settle = -1;
    for (int t = 0; t < limit; ++t) {
        EpisodeStep st;
        const SceneSpec truth = state.current_scene();
        bool detected = false;
        for (int c = 0; c < cameras; ++c) {
            auto rendered = renderer.render(state, c);
            const auto view = view_for(state, options.rig, c);
            const auto target = select_target(mock_detect(truth, view, noise, rng));
            SegmentationMask mask = target ? *target : SegmentationMask(view.width, view.height, 0.0);
            if (c == 0) detected = target.has_value();
            mask.set_confidence(1.0);
            st.raw.push_back(std::move(rendered.frame));
            st.masks.push_back(std::move(mask));
        }
        const bool armed = gate.update(detected);
        st.phase = gate.state().phase;
        for (int c = 0; c < cameras; ++c) {
            st.sevo.push_back(protocol.overlay ? compose_overlay(st.raw[c], st.masks[c], options.overlay) : st.raw[c]);
        }
        st.joints = state.joint_state();
        Action action{0.0, 0.0, state.grip};
        if (armed && settle < 0) action = oracle_action(state);
        st.action = action;
        rec.steps.push_back(std::move(st));
        state = step(state, action);
        if (settle < 0 && tracker.observe(state)) {
            if (tracker.outcome() != Outcome::success) break;
            settle = options.settle_steps;
        }
        if (settle >= 0 && settle-- == 0) break;
    }
    return rec;
}

} // namespace sevo
