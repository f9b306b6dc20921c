// sevo: command-line entry point for the observation pipeline, simulator,
// training and experiments.
//
// Exit codes: 0 success, 1 usage error, 2 calibration or acceptance failure.

#include "sevo/dataset_io.hpp"
#include "sevo/det_protocol.hpp"
#include "sevo/error.hpp"
#include "sevo/harness.hpp"
#include "sevo/pnm.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unistd.h>

namespace {

using namespace sevo;

constexpr int kExitUsage = 1;
constexpr int kExitFailed = 2;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::uint64_t default_seed() {
    if (const char* env = std::getenv("SEVO_SEED")) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(env, &used);
            if (used == std::string(env).size()) return v;
        } catch (const std::exception&) {
        }
        throw UsageError("SEVO_SEED must be a non-negative integer");
    }
    return 0;
}

ProtocolFlags parse_flags(const std::string& list) {
    ProtocolFlags f = ProtocolFlags::none();
    if (list == "none" || list.empty()) return f;
    if (list == "full") return ProtocolFlags::full();
    std::istringstream in(list);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item == "overlay") f.overlay = true;
        else if (item == "red-light" || item == "red_light") f.red_light = true;
        else if (item == "varied-bg" || item == "varied_bg") f.varied_bg = true;
        else if (item == "wrist" || item == "wrist-camera") f.wrist_camera = true;
        else if (item == "no-null") f.null_episodes = false;
        else throw UsageError("unknown protocol flag '" + item + "'");
    }
    return f;
}

Rgb parse_color(const std::string& text) {
    std::istringstream in(text);
    std::string part;
    Rgb c{};
    int i = 0;
    while (std::getline(in, part, ',')) {
        if (i >= 3) throw UsageError("--color takes three components");
        std::size_t used = 0;
        int v = -1;
        try {
            v = std::stoi(part, &used);
        } catch (const std::exception&) {
        }
        if (used != part.size() || v < 0 || v > 255) throw UsageError("--color components must be 0-255");
        c[static_cast<std::size_t>(i++)] = static_cast<std::uint8_t>(v);
    }
    if (i != 3) throw UsageError("--color takes three components");
    return c;
}

void write_report(const harness::ResultTable& table, const std::string& out) {
    if (out.empty()) {
        harness::write_csv(std::cout, table);
        return;
    }
    const std::string csv = harness::to_csv(table);
    pnm::write_file(out, std::span(reinterpret_cast<const std::uint8_t*>(csv.data()), csv.size()));
}

struct ExperimentOptions {
    int seeds = 5;
    std::uint64_t seed = 0;
    std::string out;
    int jobs = 0;
    int trials = 100;
    int episodes = 80;
    int steps = 2000;
    bool quiet = false;
};

void add_experiment_options(CLI::App* cmd, ExperimentOptions& o) {
    cmd->add_option("--seeds", o.seeds, "Number of seeds")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", o.seed, "Master seed (default: SEVO_SEED or 0)");
    cmd->add_option("--out", o.out, "Report CSV path (default: stdout)");
    cmd->add_option("--jobs", o.jobs, "Worker threads (0 = available parallelism)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--trials", o.trials, "Evaluation trials per cell")->check(CLI::PositiveNumber);
    cmd->add_option("--episodes", o.episodes, "Training episodes per policy")->check(CLI::PositiveNumber);
    cmd->add_option("--steps", o.steps, "Training steps per policy")->check(CLI::NonNegativeNumber);
    cmd->add_flag("--quiet", o.quiet, "No progress output");
}

harness::HarnessConfig harness_config(const ExperimentOptions& o) {
    harness::HarnessConfig c;
    c.jobs = o.jobs;
    c.eval_trials = o.trials;
    c.train_episodes = o.episodes;
    c.train.steps = o.steps;
    if (!o.quiet) c.log = [](const std::string& line) { std::cerr << line << '\n'; };
    return c;
}

int run_bench(int width, int height, int frames, double min_fps) {
    Rng rng(7);
    SceneSpec scene = sample_scene(EnvClass::train, ProtocolFlags::full(), rng);
    CameraView view;
    view.width = width;
    view.height = height;
    Frame frame(width, height, Rgb{90, 80, 70});
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            frame.set(x, y, Rgb{static_cast<std::uint8_t>(x), static_cast<std::uint8_t>(y),
                                static_cast<std::uint8_t>(x ^ y)});
        }
    }
    const DetectorNoise noise{0.15, 1, 0.05};
    const OverlayConfig overlay;
    std::uint64_t checksum = 0;
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < frames; ++i) {
        const auto target = select_target(mock_detect(scene, view, noise, rng));
        const SegmentationMask mask = target ? *target : SegmentationMask(width, height, 0.0);
        const Frame out = compose_overlay(frame, mask, overlay);
        checksum += out.pixels()[static_cast<std::size_t>(i) % out.pixels().size()];
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double fps = frames / std::max(secs, 1e-9);
    std::cout << "frames " << frames << " size " << width << "x" << height << " seconds " << secs << " fps " << fps
              << " checksum " << checksum << '\n';
    if (fps < min_fps) {
        std::cerr << "throughput " << fps << " fps is below " << min_fps << " fps\n";
        return kExitFailed;
    }
    return 0;
}

int run_detect_echo() {
    detproto::FdSource in(STDIN_FILENO, std::chrono::milliseconds(-1));
    detproto::FdSink out(STDOUT_FILENO);
    detproto::serve(in, out, detproto::checkerboard_reply);
    return 0;
}

int run(int argc, char** argv) {
    CLI::App app{"sevo: semantic-enhanced virtual observation pipeline, simulator and experiments"};
    app.require_subcommand(1);

    // overlay
    std::string in_path, mask_path, out_path, color_text = "255,255,0";
    double alpha = 0.45;
    auto* overlay = app.add_subcommand("overlay", "Blend a mask color into a frame");
    overlay->add_option("--in", in_path, "Input PPM")->required();
    overlay->add_option("--mask", mask_path, "Mask PGM")->required();
    overlay->add_option("--alpha", alpha, "Overlay opacity in [0, 1]");
    overlay->add_option("--color", color_text, "Overlay color R,G,B");
    overlay->add_option("--out", out_path, "Output PPM")->required();

    // collect
    int episodes = 80;
    std::string flags_text = "overlay,red-light,varied-bg";
    std::uint64_t seed = default_seed();
    std::string dir;
    auto* collect = app.add_subcommand("collect", "Record oracle demonstrations");
    collect->add_option("--episodes", episodes, "Episode count")->check(CLI::PositiveNumber);
    collect->add_option("--flags", flags_text, "Comma list of overlay,red-light,varied-bg,wrist,no-null (or none)");
    collect->add_option("--seed", seed, "Seed");
    collect->add_option("--out", dir, "Dataset directory")->required();

    // train
    std::string data_dir, policy_text = "trainable";
    int steps = 2000;
    auto* train = app.add_subcommand("train", "Train a policy on a recorded dataset");
    train->add_option("--data", data_dir, "Dataset directory")->required();
    train->add_option("--policy", policy_text, "trainable|frozen");
    train->add_option("--steps", steps, "SGD steps")->check(CLI::NonNegativeNumber);
    train->add_option("--seed", seed, "Seed");
    train->add_option("--out", out_path, "Output .sevp")->required();

    // eval
    std::string policy_path, env_text = "train";
    int trials = 100;
    std::string eval_flags = "overlay,red-light,varied-bg";
    auto* eval = app.add_subcommand("eval", "Evaluate a trained policy in closed loop");
    eval->add_option("--policy", policy_path, "Policy .sevp")->required();
    eval->add_option("--env", env_text, "train|novel-similar|novel-extreme");
    eval->add_option("--trials", trials, "Trials")->check(CLI::PositiveNumber);
    eval->add_option("--seed", seed, "Seed");
    eval->add_option("--flags", eval_flags, "Deployment flags (must match training)");

    ExperimentOptions ablate_o, transfer_o, wrist_o, eff_o;
    ablate_o.seed = transfer_o.seed = wrist_o.seed = eff_o.seed = default_seed();
    auto* ablate = app.add_subcommand("ablate", "Component ablation");
    add_experiment_options(ablate, ablate_o);
    auto* transfer = app.add_subcommand("transfer", "Cross-environment transfer");
    add_experiment_options(transfer, transfer_o);
    auto* wrist = app.add_subcommand("wrist", "Wrist-camera ablation");
    add_experiment_options(wrist, wrist_o);
    auto* eff = app.add_subcommand("data-eff", "Data efficiency sweep");
    add_experiment_options(eff, eff_o);
    std::vector<int> counts{20, 40, 80, 120};
    std::string eff_policy = "both";
    eff->add_option("--counts", counts, "Episode counts")->delimiter(',');
    eff->add_option("--policy", eff_policy, "trainable|frozen|both");

    int width = 640, height = 480, frames = 1000;
    double min_fps = 30.0;
    auto* bench = app.add_subcommand("bench", "Throughput of overlay + mock detection");
    bench->add_option("--width", width, "Frame width")->check(CLI::PositiveNumber);
    bench->add_option("--height", height, "Frame height")->check(CLI::PositiveNumber);
    bench->add_option("--frames", frames, "Frames")->check(CLI::PositiveNumber);
    bench->add_option("--min-fps", min_fps, "Required throughput");

    auto* echo = app.add_subcommand("detect-echo", "SEVO-DET/1 loopback server on stdin/stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (overlay->parsed()) {
        OverlayConfig cfg{alpha, parse_color(color_text)};
        try {
            cfg.validate();
        } catch (const InvalidArgument& e) {
            throw UsageError(e.what());
        }
        pnm::write_ppm(out_path, compose_overlay(pnm::read_ppm(in_path), pnm::read_pgm(mask_path), cfg));
        return 0;
    }
    if (collect->parsed()) {
        harness::HarnessConfig cfg;
        const auto records = harness::build_dataset(parse_flags(flags_text), episodes, seed, cfg);
        dataset::write_dataset(records, dir);
        return 0;
    }
    if (train->parsed()) {
        const auto kind = [&] {
            try {
                return policy_kind_from_string(policy_text);
            } catch (const InvalidArgument& e) {
                throw UsageError(e.what());
            }
        }();
        const auto data = dataset::read_dataset(data_dir);
        if (data.empty()) throw UsageError(data_dir + " holds no episodes");
        InputSpec spec;
        spec.cameras = static_cast<int>(data.front().meta.rig.cameras.size());
        Rng rng(derive_seed(seed, 2));
        TrainConfig tc;
        tc.steps = steps;
        tc.seed = derive_seed(seed, 2, 1);
        save_policy(out_path, sevo::train(init_policy(kind, rng, spec), data, tc));
        return 0;
    }
    if (eval->parsed()) {
        const auto params = load_policy(policy_path);
        auto flags = parse_flags(eval_flags);
        flags.wrist_camera = params.input.cameras == 3;
        const auto env = [&] {
            try {
                return env_class_from_string(env_text);
            } catch (const InvalidArgument& e) {
                throw UsageError(e.what());
            }
        }();
        harness::HarnessConfig cfg;
        const auto r = harness::evaluate(params, flags, env, trials, {seed}, cfg).front();
        std::cout << "env " << to_string(env) << " trials " << r.trials << " successes " << r.successes
                  << " success_rate " << r.success_rate() << " false_triggers " << r.false_triggers << '\n';
        return 0;
    }
    auto experiment = [&](ExperimentOptions& o, auto&& body, bool calibrate) {
        harness::PolicyCache cache(harness_config(o));
        const auto table = body(harness::make_seeds(o.seed, o.seeds), cache);
        write_report(table, o.out);
        if (calibrate) harness::check_calibration(table);
        return 0;
    };
    if (ablate->parsed()) return experiment(ablate_o, harness::run_ablation, true);
    if (transfer->parsed()) return experiment(transfer_o, harness::run_transfer, true);
    if (wrist->parsed()) return experiment(wrist_o, harness::run_wrist_ablation, false);
    if (eff->parsed()) {
        std::vector<PolicyKind> kinds;
        if (eff_policy == "both") kinds = {PolicyKind::trainable_encoder, PolicyKind::frozen_encoder};
        else {
            try {
                kinds = {policy_kind_from_string(eff_policy)};
            } catch (const InvalidArgument& e) {
                throw UsageError(e.what());
            }
        }
        return experiment(
            eff_o,
            [&](const std::vector<std::uint64_t>& seeds, harness::PolicyCache& cache) {
                harness::ResultTable all;
                for (auto k : kinds) {
                    auto t = harness::run_data_efficiency(k, counts, seeds, cache);
                    all.insert(all.end(), t.begin(), t.end());
                }
                return all;
            },
            false);
    }
    if (bench->parsed()) return run_bench(width, height, frames, min_fps);
    if (echo->parsed()) return run_detect_echo();
    return kExitUsage;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UsageError& e) {
        std::cerr << "sevo: " << e.what() << '\n';
        return kExitUsage;
    } catch (const sevo::CalibrationError& e) {
        std::cerr << "sevo: calibration failed: " << e.what() << '\n';
        return kExitFailed;
    } catch (const std::exception& e) {
        std::cerr << "sevo: " << e.what() << '\n';
        return kExitUsage;
    }
}
