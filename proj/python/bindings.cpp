#include "sevo/dataset_io.hpp"
#include "sevo/error.hpp"
#include "sevo/harness.hpp"
#include "sevo/observation.hpp"
#include "sevo/policy.hpp"
#include "sevo/safety_gate.hpp"

#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>

namespace py = pybind11;
using namespace sevo;

namespace {

using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Frame frame_from_array(const ByteArray& a) {
    if (a.ndim() != 3 || a.shape(2) != 3) throw ShapeError("frame must have shape (H, W, 3), got ndim " +
                                                           std::to_string(a.ndim()));
    const auto h = static_cast<int>(a.shape(0));
    const auto w = static_cast<int>(a.shape(1));
    std::vector<std::uint8_t> px(a.data(), a.data() + a.size());
    return Frame(w, h, std::move(px));
}

py::array_t<std::uint8_t> array_from_frame(const Frame& f) {
    py::array_t<std::uint8_t> out({f.height(), f.width(), 3});
    std::copy(f.pixels().begin(), f.pixels().end(), out.mutable_data());
    return out;
}

SegmentationMask mask_from_array(const ByteArray& a, double confidence) {
    if (a.ndim() != 2) throw ShapeError("mask must have shape (H, W), got ndim " + std::to_string(a.ndim()));
    std::vector<std::uint8_t> bits(a.data(), a.data() + a.size());
    for (auto& b : bits) b = b ? 1 : 0;
    return SegmentationMask(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), std::move(bits), confidence);
}

py::dict episode_summary(const EpisodeRecord& rec) {
    py::array_t<double> actions({static_cast<py::ssize_t>(rec.steps.size()), static_cast<py::ssize_t>(3)});
    auto a = actions.mutable_unchecked<2>();
    py::list phases;
    for (std::size_t i = 0; i < rec.steps.size(); ++i) {
        const auto& act = rec.steps[i].action;
        a(i, 0) = act.dx;
        a(i, 1) = act.dy;
        a(i, 2) = act.grip_cmd;
        phases.append(std::string(to_string(rec.steps[i].phase)));
    }
    py::dict d;
    d["id"] = rec.meta.id;
    d["protocol"] = rec.meta.flags.label();
    d["frame_rate"] = rec.meta.frame_rate;
    d["steps"] = rec.steps.size();
    d["cameras"] = rec.steps.empty() ? 0 : rec.steps.front().raw.size();
    d["actions"] = actions;
    d["phases"] = phases;
    return d;
}

} // namespace

PYBIND11_MODULE(_sevo, m) {
    m.doc() = "Segmentation-overlay observation core, safety gate and imitation harness";

    // Translators run newest first, so the base class goes in before its subclasses.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<CalibrationError>(m, "CalibrationError", PyExc_RuntimeError);

    m.def(
        "compose_overlay",
        [](const ByteArray& frame, const ByteArray& mask, double alpha, std::array<std::uint8_t, 3> color) {
            OverlayConfig cfg{alpha, color};
            return array_from_frame(compose_overlay(frame_from_array(frame), mask_from_array(mask, 1.0), cfg));
        },
        py::arg("frame"), py::arg("mask"), py::arg("alpha") = 0.45,
        py::arg("color") = std::array<std::uint8_t, 3>{255, 255, 0},
        "Blend the overlay color into every masked pixel of an (H, W, 3) uint8 frame.");

    m.def("blend_channel", &blend_channel, py::arg("pixel"), py::arg("color"), py::arg("alpha"));

    m.def(
        "downsample",
        [](const ByteArray& frame, int size) {
            const auto v = downsample_area_mean(frame_from_array(frame), size);
            py::array_t<float> out({size, size, 3});
            std::copy(v.begin(), v.end(), out.mutable_data());
            return out;
        },
        py::arg("frame"), py::arg("size") = 16);

    py::enum_<GatePhase>(m, "GatePhase")
        .value("idle", GatePhase::idle)
        .value("debouncing", GatePhase::debouncing)
        .value("armed", GatePhase::armed);

    py::class_<GateConfig>(m, "GateConfig")
        .def(py::init([](double debounce, int flicker_tolerance, double frame_rate) {
                 GateConfig c{debounce, flicker_tolerance, frame_rate};
                 c.validate();
                 return c;
             }),
             py::arg("debounce") = 1.0, py::arg("flicker_tolerance") = 2, py::arg("frame_rate") = 30.0)
        .def_readonly("debounce", &GateConfig::debounce)
        .def_readonly("flicker_tolerance", &GateConfig::flicker_tolerance)
        .def_readonly("frame_rate", &GateConfig::frame_rate)
        .def_property_readonly("required_frames", &GateConfig::required_frames);

    py::class_<SafetyGate>(m, "SafetyGate")
        .def(py::init<GateConfig>(), py::arg("config") = GateConfig{})
        .def("update", &SafetyGate::update, py::arg("detected"))
        .def("feed",
             [](SafetyGate& g, const std::vector<bool>& stream) {
                 std::vector<bool> out;
                 out.reserve(stream.size());
                 for (bool d : stream) out.push_back(g.update(d));
                 return out;
             })
        .def("reset", py::overload_cast<>(&SafetyGate::reset))
        .def_property_readonly("phase", [](const SafetyGate& g) { return g.state().phase; })
        .def_property_readonly("consecutive_present", [](const SafetyGate& g) { return g.state().consecutive_present; })
        .def_property_readonly("consecutive_absent", [](const SafetyGate& g) { return g.state().consecutive_absent; });

    py::class_<ProtocolFlags>(m, "ProtocolFlags")
        .def(py::init([](bool overlay, bool red_light, bool varied_bg, bool null_episodes, bool wrist_camera) {
                 return ProtocolFlags{overlay, red_light, varied_bg, null_episodes, wrist_camera};
             }),
             py::arg("overlay") = true, py::arg("red_light") = true, py::arg("varied_bg") = true,
             py::arg("null_episodes") = true, py::arg("wrist_camera") = false)
        .def_static("full", &ProtocolFlags::full)
        .def_static("none", &ProtocolFlags::none)
        .def_readwrite("overlay", &ProtocolFlags::overlay)
        .def_readwrite("red_light", &ProtocolFlags::red_light)
        .def_readwrite("varied_bg", &ProtocolFlags::varied_bg)
        .def_readwrite("null_episodes", &ProtocolFlags::null_episodes)
        .def_readwrite("wrist_camera", &ProtocolFlags::wrist_camera)
        .def_property_readonly("label", &ProtocolFlags::label)
        .def("__repr__", [](const ProtocolFlags& f) { return "ProtocolFlags(" + f.label() + ")"; });

    py::class_<PolicyParams>(m, "Policy")
        .def_property_readonly("kind", [](const PolicyParams& p) { return std::string(to_string(p.kind)); })
        .def_readonly("chunk_len", &PolicyParams::chunk_len)
        .def_property_readonly("input_size", [](const PolicyParams& p) { return p.input.size(); })
        .def_property_readonly("parameter_count", &PolicyParams::parameter_count)
        .def_property_readonly("trainable_fraction", &PolicyParams::trainable_fraction)
        .def("predict",
             [](const PolicyParams& p, py::array_t<float, py::array::c_style | py::array::forcecast> input) {
                 const std::span<const float> in(input.data(), static_cast<std::size_t>(input.size()));
                 const auto actions = forward(p, in);
                 py::array_t<double> out({static_cast<py::ssize_t>(actions.size()), static_cast<py::ssize_t>(3)});
                 auto o = out.mutable_unchecked<2>();
                 for (std::size_t i = 0; i < actions.size(); ++i) {
                     o(i, 0) = actions[i].dx;
                     o(i, 1) = actions[i].dy;
                     o(i, 2) = actions[i].grip_cmd;
                 }
                 return out;
             },
             py::arg("input"), "Action chunk of shape (chunk_len, 3) for one flattened observation vector.")
        .def("save", [](const PolicyParams& p, const std::filesystem::path& path) { save_policy(path, p); })
        .def(py::self == py::self);

    m.def(
        "init_policy",
        [](const std::string& kind, std::uint64_t seed) {
            Rng rng(seed);
            return init_policy(policy_kind_from_string(kind), rng);
        },
        py::arg("kind") = "trainable_encoder", py::arg("seed") = 0);
    m.def("load_policy", &load_policy, py::arg("path"));

    m.def(
        "collect",
        [](const std::filesystem::path& out, const ProtocolFlags& flags, int episodes, std::uint64_t seed) {
            harness::HarnessConfig cfg;
            py::gil_scoped_release release;
            dataset::write_dataset(harness::build_dataset(flags, episodes, seed, cfg), out);
        },
        py::arg("out"), py::arg("flags") = ProtocolFlags::full(), py::arg("episodes") = 10, py::arg("seed") = 0,
        "Record oracle demonstrations into a dataset directory.");

    m.def(
        "read_episode", [](const std::filesystem::path& dir) { return episode_summary(dataset::read_episode(dir)); },
        py::arg("path"));
    m.def("read_dataset", [](const std::filesystem::path& dir) {
        py::list out;
        for (const auto& rec : dataset::read_dataset(dir)) out.append(episode_summary(rec));
        return out;
    });

    m.def(
        "train",
        [](const std::filesystem::path& dataset_dir, const std::string& kind, int steps, std::uint64_t seed) {
            const auto episodes = dataset::read_dataset(dataset_dir);
            TrainConfig tc;
            tc.steps = steps;
            tc.seed = seed;
            Rng rng(seed);
            InputSpec spec;
            if (!episodes.empty() && !episodes.front().steps.empty()) {
                spec.cameras = static_cast<int>(episodes.front().steps.front().sevo.size());
            }
            py::gil_scoped_release release;
            return train(init_policy(policy_kind_from_string(kind), rng, spec), episodes, tc);
        },
        py::arg("dataset"), py::arg("kind") = "trainable_encoder", py::arg("steps") = 2000, py::arg("seed") = 0);

    m.def(
        "evaluate",
        [](const PolicyParams& policy, const ProtocolFlags& flags, const std::string& env, int trials,
           std::uint64_t seed) {
            harness::HarnessConfig cfg;
            harness::ConditionResult r;
            {
                py::gil_scoped_release release;
                r = harness::evaluate(policy, flags, env_class_from_string(env), trials, {seed}, cfg).front();
            }
            return py::make_tuple(r.success_rate(), r.successes, r.bottle_trials(), r.false_triggers);
        },
        py::arg("policy"), py::arg("flags") = ProtocolFlags::full(), py::arg("env") = "train",
        py::arg("trials") = 20, py::arg("seed") = 0,
        "Returns (success_rate, successes, bottle_trials, false_triggers).");
}
