// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes. Experiment criteria share one policy cache, so each
// (protocol, policy kind, seed, episode count) cell is trained once.
//
// SEVO_ACCEPT_SEED overrides the master seed (default 1).

#include "sevo/dataset_io.hpp"
#include "sevo/det_protocol.hpp"
#include "sevo/error.hpp"
#include "sevo/harness.hpp"
#include "sevo/observation.hpp"
#include "sevo/pnm.hpp"
#include "sevo/policy.hpp"
#include "sevo/safety_gate.hpp"
#include "sevo/sim_env.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

using namespace sevo;
using namespace sevo::harness;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Verdict& v) {
    std::cout << (v.pass ? "PASS" : "FAIL") << " " << id << " " << name << ": " << v.detail << std::endl;
    if (!v.pass) ++failures;
}

// Runs one criterion, turning an escaped exception into a failure.
void criterion(int id, const std::string& name, const std::function<Verdict()>& body) {
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    report(id, name, v);
}

std::string fmt(double v, int digits = 3) {
    std::ostringstream s;
    s.precision(digits);
    s << std::fixed << v;
    return s.str();
}

std::uint8_t scalar_blend(std::uint8_t p, std::uint8_t c, double alpha) {
    const double v = (1.0 - alpha) * p + alpha * c;
    const double r = v < 0 ? -std::floor(-v + 0.5) : std::floor(v + 0.5);
    return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

Frame random_frame(Rng& rng, int w, int h) {
    Frame f(w, h);
    for (auto& b : f.pixels()) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    return f;
}

SegmentationMask random_mask(Rng& rng, int w, int h, double density) {
    SegmentationMask m(w, h, 1.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) m.set(x, y, rng.bernoulli(density));
    }
    return m;
}

// --- 1, 2: overlay -----------------------------------------------------------

Verdict overlay_exactness() {
    const auto t0 = Clock::now();
    Rng rng(101);
    int mismatches = 0;
    for (int c = 0; c < 100; ++c) {
        const int w = static_cast<int>(rng.uniform_int(1, 160));
        const int h = static_cast<int>(rng.uniform_int(1, 120));
        const Frame f = random_frame(rng, w, h);
        const SegmentationMask m = random_mask(rng, w, h, rng.uniform());
        OverlayConfig cfg;
        cfg.alpha = rng.uniform();
        for (auto& ch : cfg.color) ch = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
        const Frame out = compose_overlay(f, m, cfg);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const Rgb p = f.at(x, y);
                Rgb want = p;
                if (m.at(x, y)) {
                    for (int k = 0; k < 3; ++k) want[k] = scalar_blend(p[k], cfg.color[k], cfg.alpha);
                }
                if (out.at(x, y) != want) ++mismatches;
            }
        }
    }
    const double secs = seconds_since(t0);
    return {mismatches == 0 && secs < 5.0,
            std::to_string(mismatches) + " mismatching pixels over 100 cases, " + fmt(secs) + " s"};
}

Verdict overlay_signature() {
    const OverlayConfig cfg;
    int lo_rg = 255, hi_b = 0;
    // Channels blend independently, so every input value covers every pixel.
    Frame all(256, 1);
    for (int v = 0; v < 256; ++v) all.set(v, 0, Rgb{static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v),
                                                    static_cast<std::uint8_t>(v)});
    SegmentationMask on(256, 1);
    for (int v = 0; v < 256; ++v) on.set(v, 0, true);
    const Frame out = compose_overlay(all, on, cfg);
    for (int v = 0; v < 256; ++v) {
        const Rgb p = out.at(v, 0);
        lo_rg = std::min({lo_rg, static_cast<int>(p[0]), static_cast<int>(p[1])});
        hi_b = std::max(hi_b, static_cast<int>(p[2]));
    }
    return {lo_rg >= 114 && hi_b <= 141, "min R/G " + std::to_string(lo_rg) + ", max B " + std::to_string(hi_b)};
}

// --- 3: gate -----------------------------------------------------------------

// Frame-count model of the gate, independent of the state machine.
struct ReferenceGate {
    int required;
    int tolerance;
    bool active = false;
    bool armed = false;
    int count = 0;
    int gap = 0;

    bool feed(bool detected) {
        if (detected) {
            gap = 0;
            count = active ? count + 1 : 1;
            active = true;
            if (count >= required) armed = true;
        } else if (active && ++gap > tolerance) {
            if (armed) {
                armed = false;
            } else {
                active = false;
            }
            count = 0;
        }
        return armed && detected;
    }
};

Verdict gate_safety() {
    SafetyGate empty;
    int armed_frames = 0;
    for (int i = 0; i < 10000; ++i) {
        empty.update(false);
        if (empty.state().phase == GatePhase::armed) ++armed_frames;
    }
    Rng rng(303);
    int disagreements = 0;
    for (int s = 0; s < 1000; ++s) {
        GateConfig cfg;
        cfg.debounce = rng.uniform(0.05, 1.5);
        cfg.frame_rate = s % 2 ? 30.0 : rng.uniform(5.0, 60.0);
        cfg.flicker_tolerance = static_cast<int>(rng.uniform_int(0, 4));
        ReferenceGate ref{cfg.required_frames(), cfg.flicker_tolerance};
        SafetyGate gate(cfg);
        const double p = rng.uniform(0.3, 1.0);
        const int n = static_cast<int>(rng.uniform_int(1, 500));
        for (int i = 0; i < n; ++i) {
            const bool d = rng.bernoulli(p);
            if (gate.update(d) != ref.feed(d)) ++disagreements;
        }
    }
    return {armed_frames == 0 && disagreements == 0,
            std::to_string(armed_frames) + " armed frames on the empty stream, " + std::to_string(disagreements) +
                " disagreements on 1000 random streams"};
}

// --- 4: throughput -------------------------------------------------------------

Verdict throughput() {
    const auto t0 = Clock::now();
    const std::string cmd = std::string(SEVO_CLI_PATH) + " bench --width 640 --height 480 --frames 1000 --min-fps 30";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return {false, "could not start the bench subcommand"};
    std::string out;
    char buf[256];
    while (std::fgets(buf, sizeof buf, pipe)) out += buf;
    const int status = pclose(pipe);
    const double secs = seconds_since(t0);
    double fps = 0.0;
    const auto at = out.find(" fps ");
    if (at != std::string::npos) fps = std::atof(out.c_str() + at + 5);
    return {status == 0 && fps >= 30.0 && secs <= 60.0,
            fmt(fps, 1) + " frames/s at 640x480, benchmark took " + fmt(secs, 1) + " s"};
}

// --- 5: gradients ----------------------------------------------------------------

Verdict gradients() {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(derive_seed(500, seed));
        const auto kind = seed % 2 ? PolicyKind::frozen_encoder : PolicyKind::trainable_encoder;
        const auto params = init_policy(kind, rng);
        std::vector<Sample> batch(8);
        for (auto& s : batch) {
            s.input.resize(static_cast<std::size_t>(params.input.size()));
            for (auto& v : s.input) v = static_cast<float>(rng.uniform());
            s.target.resize(static_cast<std::size_t>(params.chunk_len * 3));
            for (auto& v : s.target) v = static_cast<float>(rng.uniform(-1.0, 1.0));
        }
        worst = std::max(worst, grad_check(params, batch, seed));
    }
    std::ostringstream d;
    d << "max relative error " << worst << " over 10 seeds";
    return {worst < 1e-4, d.str()};
}

// --- 6: oracle -------------------------------------------------------------------

Verdict oracle_soundness() {
    HarnessConfig cfg;
    cfg.noise = {};
    cfg.jobs = 1;
    Rng rng(606);
    int successes = 0;
    for (int i = 0; i < 100; ++i) {
        const auto scene = sample_scene(static_cast<EnvClass>(i % 3), ProtocolFlags::full(), rng);
        const auto rec = oracle_demonstrate(scene, cfg.gate, ProtocolFlags::full(), rng);
        std::vector<EnvState> traj{initial_state(scene)};
        for (const auto& st : rec.steps) traj.push_back(step(traj.back(), st.action));
        if (grasp_outcome(traj) == Outcome::success) ++successes;
    }
    int false_triggers = 0;
    RolloutOptions opts;
    for (int i = 0; i < 100; ++i) {
        const auto scene = sample_scene(static_cast<EnvClass>(i % 3), ProtocolFlags::full(), rng, true);
        const auto r = rollout(scene, oracle_controller(), ProtocolFlags::full(), cfg, opts, rng);
        if (r.outcome == Outcome::false_trigger) ++false_triggers;
    }
    return {successes == 100 && false_triggers == 0,
            "demonstration success " + fmt(successes / 100.0, 2) + ", " + std::to_string(false_triggers) +
                " false triggers on 100 null scenes"};
}

// --- 7 to 12: experiments --------------------------------------------------------

bool majority(int hits, std::size_t seeds) { return 2 * hits > static_cast<int>(seeds); }

double cell_rate(const ResultTable& t, const std::string& condition, PolicyKind kind, EnvClass env,
                 std::uint64_t seed) {
    for (const auto& r : t) {
        if (r.condition == condition && r.policy == kind && r.env == env && r.seed == seed) return r.success_rate();
    }
    throw InvalidArgument("missing cell " + condition + "/" + std::string(to_string(kind)) + "/" +
                          std::string(to_string(env)));
}

double median_of(const ResultTable& t, const std::string& condition, PolicyKind kind, EnvClass env) {
    return median_success(t, [&](const ConditionResult& r) {
        return r.condition == condition && r.policy == kind && r.env == env;
    });
}

// --- 13: IO -------------------------------------------------------------------------

std::map<std::string, std::vector<std::uint8_t>> file_tree(const fs::path& root) {
    std::map<std::string, std::vector<std::uint8_t>> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = pnm::read_file(e.path());
    }
    return out;
}

Verdict io_determinism() {
    const fs::path root = fs::temp_directory_path() / ("sevo_accept_io_" + std::to_string(::getpid()));
    fs::remove_all(root);
    Rng rng(1313);
    int round_trip = 0, identical = 0;
    for (int i = 0; i < 50; ++i) {
        ProtocolFlags flags;
        flags.overlay = rng.bernoulli(0.5);
        flags.red_light = rng.bernoulli(0.5);
        flags.varied_bg = rng.bernoulli(0.5);
        flags.wrist_camera = rng.bernoulli(0.3);
        const auto scene = sample_scene(static_cast<EnvClass>(rng.uniform_int(0, 2)), flags, rng, rng.bernoulli(0.2));
        DemoOptions opts;
        opts.rig = default_rig(flags.wrist_camera);
        opts.noise = {0.15, 1, 0.05};
        opts.max_steps = static_cast<int>(rng.uniform_int(1, 60));
        auto rec = oracle_demonstrate(scene, GateConfig{}, flags, rng, opts);
        rec.meta.id = "accept_" + std::to_string(i);
        const auto a = root / ("a" + std::to_string(i));
        const auto b = root / ("b" + std::to_string(i));
        dataset::write_episode(rec, a);
        dataset::write_episode(rec, b);
        if (dataset::read_episode(a) == rec) ++round_trip;
        if (file_tree(a) == file_tree(b)) ++identical;
    }
    fs::remove_all(root);

    detproto::ExternalDetector echo({SEVO_CLI_PATH, "detect-echo"});
    int exact = 0;
    const int exchanges = 5;
    for (int i = 0; i < exchanges; ++i) {
        const int w = static_cast<int>(rng.uniform_int(1, 320));
        const int h = static_cast<int>(rng.uniform_int(1, 240));
        const Frame f = random_frame(rng, w, h);
        const auto want = detproto::encode_reply(detproto::checkerboard_reply(f));
        if (echo.exchange_raw(detproto::encode_request(f), w, h) == want) ++exact;
    }
    return {round_trip == 50 && identical == 50 && exact == exchanges,
            std::to_string(round_trip) + "/50 round-trips, " + std::to_string(identical) + "/50 identical rewrites, " +
                std::to_string(exact) + "/" + std::to_string(exchanges) + " byte-exact echo exchanges"};
}

} // namespace

int main() {
    const char* seed_env = std::getenv("SEVO_ACCEPT_SEED");
    const std::uint64_t master = seed_env ? std::strtoull(seed_env, nullptr, 10) : 1;
    const auto seeds = make_seeds(master, 5);

    criterion(1, "overlay exactness", overlay_exactness);
    criterion(2, "overlay signature", overlay_signature);
    criterion(3, "gate safety", gate_safety);
    criterion(4, "throughput", throughput);
    criterion(5, "gradient correctness", gradients);
    criterion(6, "oracle soundness", oracle_soundness);

    HarnessConfig config;
    config.log = [](const std::string& line) { std::cerr << line << '\n'; };
    PolicyCache cache(config);

    ResultTable ablation;
    double ablation_secs = 0.0;
    try {
        const auto t0 = Clock::now();
        ablation = run_ablation(seeds, cache);
        ablation_secs = seconds_since(t0);
    } catch (const std::exception& e) {
        std::cerr << "ablation failed: " << e.what() << '\n';
    }

    criterion(7, "calibration gate", [&]() -> Verdict {
        const double m = median_of(ablation, "baseline", PolicyKind::trainable_encoder, EnvClass::train);
        return {m >= 0.3 && m <= 0.9, "baseline trainable train-env median " + fmt(m)};
    });

    criterion(8, "ablation orderings", [&]() -> Verdict {
        int a = 0, b = 0, c = 0;
        std::ostringstream d;
        for (auto seed : seeds) {
            bool beats = true;
            for (auto kind : {PolicyKind::trainable_encoder, PolicyKind::frozen_encoder}) {
                double full = 0.0, base = 0.0;
                for (auto env : {EnvClass::train, EnvClass::novel_similar}) {
                    full += cell_rate(ablation, "full", kind, env, seed);
                    base += cell_rate(ablation, "baseline", kind, env, seed);
                }
                beats = beats && full > base;
            }
            const auto rank = rank_components(ablation, std::nullopt, seed);
            a += beats;
            b += rank.order.front() == Component::varied_bg;
            c += rank.drops.at(Component::red_light) >= rank.drops.at(Component::overlay);
            d << " [" << fmt(rank.drops.at(Component::varied_bg), 2) << " " << fmt(rank.drops.at(Component::red_light), 2)
              << " " << fmt(rank.drops.at(Component::overlay), 2) << "]";
        }
        const bool ok = majority(a, seeds.size()) && majority(b, seeds.size()) && majority(c, seeds.size()) &&
                        ablation_secs < 1800.0;
        return {ok, "full>baseline " + std::to_string(a) + "/5, varied_bg first " + std::to_string(b) +
                        "/5, red>=overlay " + std::to_string(c) + "/5, drops (bg red overlay)" + d.str() + ", " +
                        fmt(ablation_secs / 60.0, 1) + " min"};
    });

    criterion(9, "transfer orderings", [&]() -> Verdict {
        const auto t = run_transfer(seeds, cache);
        int gap = 0;
        bool extreme_le_similar = true;
        for (auto seed : seeds) {
            if (cell_rate(t, "full", PolicyKind::trainable_encoder, EnvClass::novel_similar, seed) -
                    cell_rate(t, "baseline", PolicyKind::trainable_encoder, EnvClass::novel_similar, seed) >=
                0.15) {
                ++gap;
            }
        }
        double worst_base_extreme = 0.0;
        for (const std::string cond : {"full", "baseline"}) {
            for (auto kind : {PolicyKind::trainable_encoder, PolicyKind::frozen_encoder}) {
                const double ex = median_of(t, cond, kind, EnvClass::novel_extreme);
                const double sim = median_of(t, cond, kind, EnvClass::novel_similar);
                extreme_le_similar = extreme_le_similar && ex <= sim;
                if (cond == "baseline") worst_base_extreme = std::max(worst_base_extreme, ex);
            }
        }
        return {majority(gap, seeds.size()) && extreme_le_similar && worst_base_extreme <= 0.05,
                "novel_similar gap >= 0.15 in " + std::to_string(gap) + "/5 seeds, extreme <= similar " +
                    (extreme_le_similar ? "everywhere" : "violated") + ", baseline extreme median " +
                    fmt(worst_base_extreme)};
    });

    criterion(10, "frozen-encoder gap", [&]() -> Verdict {
        std::ostringstream d;
        bool ok = true;
        for (auto env : {EnvClass::train, EnvClass::novel_similar}) {
            const double tr = median_of(ablation, "full", PolicyKind::trainable_encoder, env);
            const double fr = median_of(ablation, "full", PolicyKind::frozen_encoder, env);
            ok = ok && tr >= fr;
            if (env != EnvClass::train) d << "; ";
            d << to_string(env) << " trainable " << fmt(tr) << " vs frozen " << fmt(fr);
        }
        return {ok, d.str()};
    });

    criterion(11, "wrist degradation", [&]() -> Verdict {
        const auto t = run_wrist_ablation(seeds, cache);
        int hits = 0;
        std::ostringstream d;
        for (auto seed : seeds) {
            const auto env = EnvClass::novel_similar;
            const double frozen_drop = cell_rate(t, "full", PolicyKind::frozen_encoder, env, seed) -
                                       cell_rate(t, "full_wrist", PolicyKind::frozen_encoder, env, seed);
            const double trainable_drop = cell_rate(t, "full", PolicyKind::trainable_encoder, env, seed) -
                                          cell_rate(t, "full_wrist", PolicyKind::trainable_encoder, env, seed);
            hits += frozen_drop >= 0.15 && frozen_drop > trainable_drop;
            d << " [" << fmt(frozen_drop, 2) << " " << fmt(trainable_drop, 2) << "]";
        }
        return {majority(hits, seeds.size()),
                std::to_string(hits) + "/5 seeds, novel drops (frozen trainable)" + d.str()};
    });

    criterion(12, "data efficiency", [&]() -> Verdict {
        const std::vector<int> counts{20, 40, 80};
        const auto trainable = run_data_efficiency(PolicyKind::trainable_encoder, counts, seeds, cache);
        const auto frozen = run_data_efficiency(PolicyKind::frozen_encoder, {20}, seeds, cache);
        std::vector<double> medians;
        for (int n : counts) {
            medians.push_back(median_success(trainable, [&](const ConditionResult& r) {
                return r.condition == "full_ep" + std::to_string(n);
            }));
        }
        const bool monotone = std::is_sorted(medians.begin(), medians.end());
        int below = 0;
        for (auto seed : seeds) {
            below += cell_rate(frozen, "full_ep20", PolicyKind::frozen_encoder, EnvClass::train, seed) <
                     cell_rate(trainable, "full_ep20", PolicyKind::trainable_encoder, EnvClass::train, seed);
        }
        return {monotone && majority(below, seeds.size()),
                "trainable medians " + fmt(medians[0]) + " " + fmt(medians[1]) + " " + fmt(medians[2]) +
                    ", frozen < trainable at 20 episodes in " + std::to_string(below) + "/5 seeds"};
    });

    criterion(13, "IO determinism", io_determinism);

    return failures == 0 ? 0 : 1;
}
