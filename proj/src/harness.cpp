#include "sevo/harness.hpp"

#include "sevo/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace sevo::harness {

namespace {

// Stream tags for derive_seed. Each cell seed fans out into independent
// streams, and the stream for a purpose never depends on flags or policy kind,
// so conditions stay paired.
constexpr std::uint64_t kDataTag = 1;
constexpr std::uint64_t kTrainTag = 2;
constexpr std::uint64_t kEvalTag = 3;
constexpr std::uint64_t kSceneTag = 4;
constexpr std::uint64_t kEpisodeTag = 5;

// Commanded planar motions shorter than this are treated as "hold still".
constexpr double kMotionDeadband = 0.2;

DemoOptions demo_options(const ProtocolFlags& flags, const HarnessConfig& config) {
    DemoOptions o;
    o.rig = default_rig(flags.wrist_camera);
    o.noise = config.noise;
    o.overlay = config.overlay;
    return o;
}

InputSpec input_for(const ProtocolFlags& flags) {
    InputSpec spec;
    spec.cameras = static_cast<int>(default_rig(flags.wrist_camera).cameras.size());
    return spec;
}

EpisodeRecord demonstrate(const ProtocolFlags& flags, int index, std::uint64_t seed, const HarnessConfig& config) {
    const std::uint64_t ep_seed = derive_seed(seed, kDataTag, static_cast<std::uint64_t>(index));
    Rng scene_rng(derive_seed(ep_seed, kSceneTag));
    const SceneSpec scene = sample_scene(EnvClass::train, flags, scene_rng, is_null_episode(flags, index));
    Rng rng(derive_seed(ep_seed, kEpisodeTag));
    EpisodeRecord rec = oracle_demonstrate(scene, config.gate, flags, rng, demo_options(flags, config));
    rec.meta.id = "ep_" + std::to_string(index);
    return rec;
}

std::string request_key(const PolicyRequest& r) {
    std::ostringstream k;
    k << r.flags.label() << '|' << to_string(r.kind) << '|' << r.seed << '|' << r.episodes;
    return k.str();
}

std::string dataset_key(const PolicyRequest& r) {
    std::ostringstream k;
    k << r.flags.label() << '|' << r.seed << '|' << r.episodes;
    return k.str();
}

std::string_view policy_token(PolicyKind kind) {
    return kind == PolicyKind::trainable_encoder ? "trainable" : "frozen";
}

std::string_view env_token(EnvClass env) {
    switch (env) {
    case EnvClass::train: return "train";
    case EnvClass::novel_similar: return "novel_similar";
    case EnvClass::novel_extreme: return "novel_extreme";
    }
    return "?";
}

void log(const HarnessConfig& config, const std::string& line) {
    if (config.log) config.log(line);
}

struct Cell {
    std::string condition;
    PolicyRequest request;
    EnvClass env;
};

// Trains every policy the cells need, then evaluates the cells in parallel.
ResultTable run_cells(const std::vector<Cell>& cells, PolicyCache& cache) {
    std::vector<PolicyRequest> requests;
    for (const auto& c : cells) requests.push_back(c.request);
    cache.prepare(requests);
    const auto& config = cache.config();
    ResultTable table(cells.size());
    std::vector<const PolicyParams*> policies;
    for (const auto& c : cells) policies.push_back(&cache.get(c.request));
    parallel_for(static_cast<int>(cells.size()), config.jobs, [&](int i) {
        const auto& c = cells[static_cast<std::size_t>(i)];
        const auto& p = *policies[static_cast<std::size_t>(i)];
        auto r = evaluate_controller(policy_controller(p), p.chunk_len, c.request.flags, c.env, config.eval_trials,
                                     derive_seed(c.request.seed, kEvalTag), config);
        r.condition = c.condition;
        r.policy = c.request.kind;
        r.seed = c.request.seed;
        table[static_cast<std::size_t>(i)] = r;
    });
    for (const auto& r : table) {
        log(config, "eval " + r.condition + " " + std::string(policy_token(r.policy)) + " " +
                        std::string(env_token(r.env)) + " seed " + std::to_string(r.seed) + ": " +
                        std::to_string(r.successes) + "/" + std::to_string(r.bottle_trials()) + " success, " +
                        std::to_string(r.false_triggers) + " false triggers");
    }
    return table;
}

ProtocolFlags full_flags() { return ProtocolFlags::full(); }

} // namespace

int ConditionResult::null_trials() const { return null_trial_count(trials); }

double ConditionResult::success_rate() const {
    const int n = bottle_trials();
    return n > 0 ? static_cast<double>(successes) / n : 0.0;
}

bool is_null_trial(int index) { return index % 10 == 9; }

int null_trial_count(int trials) { return trials / 10; }

bool is_null_episode(const ProtocolFlags& flags, int index) { return flags.null_episodes && index % 10 == 9; }

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    int workers = jobs > 0 ? jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    workers = std::min(workers, n);
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            for (;;) {
                {
                    std::lock_guard lock(error_mutex);
                    if (error) return;
                }
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

std::vector<EpisodeRecord> build_dataset(const ProtocolFlags& flags, int n_episodes, std::uint64_t seed,
                                         const HarnessConfig& config) {
    if (n_episodes < 1) throw InvalidArgument("n_episodes must be at least 1");
    std::vector<EpisodeRecord> out(static_cast<std::size_t>(n_episodes));
    parallel_for(n_episodes, config.jobs,
                 [&](int i) { out[static_cast<std::size_t>(i)] = demonstrate(flags, i, seed, config); });
    return out;
}

std::vector<Sample> collect_samples(const ProtocolFlags& flags, int n_episodes, std::uint64_t seed,
                                    const HarnessConfig& config, int chunk_len) {
    if (n_episodes < 1) throw InvalidArgument("n_episodes must be at least 1");
    const InputSpec spec = input_for(flags);
    std::vector<Sample> samples;
    for (int i = 0; i < n_episodes; ++i) {
        const std::vector<EpisodeRecord> one{demonstrate(flags, i, seed, config)};
        auto s = make_samples(one, spec, chunk_len);
        std::move(s.begin(), s.end(), std::back_inserter(samples));
    }
    return samples;
}

Controller policy_controller(const PolicyParams& params) {
    return [&params](const VirtualObservation& obs, const EnvState&) {
        auto chunk = forward(params, obs);
        for (auto& a : chunk) {
            if (std::hypot(a.dx, a.dy) < kMotionDeadband) a.dx = a.dy = 0.0;
        }
        return chunk;
    };
}

Controller oracle_controller() {
    return [](const VirtualObservation&, const EnvState& state) { return std::vector<Action>{oracle_action(state)}; };
}

RolloutResult rollout(const SceneSpec& scene, const Controller& controller, const ProtocolFlags& flags,
                      const HarnessConfig& config, const RolloutOptions& options, Rng& rng) {
    const CameraRig rig = default_rig(flags.wrist_camera);
    const DetectorNoise noise = config.noise.with_led(scene.lighting.led.has_value());
    const int cameras = static_cast<int>(rig.cameras.size());
    Renderer renderer(scene, rig);
    SafetyGate gate(config.gate);
    EnvState state = initial_state(scene);
    OutcomeTracker tracker(state, options.max_steps);
    std::vector<Action> pending;
    std::size_t cursor = 0;
    RolloutResult result;
    std::vector<Frame> raw(static_cast<std::size_t>(cameras));
    std::vector<SegmentationMask> masks(static_cast<std::size_t>(cameras));
    for (int t = 0; t < options.max_steps; ++t) {
        const SceneSpec truth = state.current_scene();
        bool detected = false;
        for (int c = 0; c < cameras; ++c) {
            auto rendered = renderer.render(state, c);
            const auto view = view_for(state, rig, c);
            const auto target = select_target(mock_detect(truth, view, noise, rng));
            if (c == 0) detected = target.has_value();
            raw[static_cast<std::size_t>(c)] = std::move(rendered.frame);
            masks[static_cast<std::size_t>(c)] =
                target ? *target : SegmentationMask(view.width, view.height, 0.0);
        }
        const bool enabled = gate.update(detected);
        Action action{0.0, 0.0, state.grip};
        if (options.gated && !enabled) {
            // A held gate also drops the rest of the current chunk.
            pending.clear();
            cursor = 0;
        } else {
            if (cursor >= pending.size()) {
                const auto obs = make_virtual_observation(raw, masks, state.joint_state(), config.overlay,
                                                          flags.overlay, t / config.gate.frame_rate);
                pending = controller(obs, state);
                cursor = 0;
                ++result.queries;
                if (static_cast<int>(pending.size()) > options.chunk_len) pending.resize(options.chunk_len);
            }
            if (cursor < pending.size()) action = pending[cursor++];
        }
        state = step(state, action);
        result.steps = t + 1;
        if (tracker.observe(state)) break;
    }
    result.outcome = tracker.decided() ? tracker.outcome() : Outcome::timeout;
    return result;
}

ConditionResult evaluate_controller(const Controller& controller, int chunk_len, const ProtocolFlags& flags,
                                    EnvClass env, int n_trials, std::uint64_t seed, const HarnessConfig& config) {
    if (n_trials < 1) throw InvalidArgument("n_trials must be at least 1");
    ConditionResult r;
    r.flags = flags;
    r.env = env;
    r.trials = n_trials;
    r.seed = seed;
    RolloutOptions options;
    options.chunk_len = chunk_len;
    for (int i = 0; i < n_trials; ++i) {
        const std::uint64_t trial_seed = derive_seed(seed, static_cast<std::uint64_t>(env), static_cast<std::uint64_t>(i));
        Rng scene_rng(derive_seed(trial_seed, kSceneTag));
        const bool null_trial = is_null_trial(i);
        // Deployment rooms vary regardless of how the demonstrations were collected.
        ProtocolFlags deploy = flags;
        deploy.varied_bg = true;
        const SceneSpec scene = sample_scene(env, deploy, scene_rng, null_trial);
        Rng rng(derive_seed(trial_seed, kEpisodeTag));
        const auto out = rollout(scene, controller, flags, config, options, rng);
        if (null_trial) {
            if (out.outcome == Outcome::false_trigger) ++r.false_triggers;
        } else if (out.outcome == Outcome::success) {
            ++r.successes;
        }
    }
    return r;
}

std::vector<ConditionResult> evaluate(const PolicyParams& policy, const ProtocolFlags& flags, EnvClass env,
                                      int n_trials, const std::vector<std::uint64_t>& seeds,
                                      const HarnessConfig& config) {
    std::vector<ConditionResult> out(seeds.size());
    parallel_for(static_cast<int>(seeds.size()), config.jobs, [&](int i) {
        const auto seed = seeds[static_cast<std::size_t>(i)];
        auto r = evaluate_controller(policy_controller(policy), policy.chunk_len, flags, env, n_trials,
                                     derive_seed(seed, kEvalTag), config);
        r.condition = flags.label();
        r.policy = policy.kind;
        r.seed = seed;
        out[static_cast<std::size_t>(i)] = r;
    });
    return out;
}

std::vector<std::uint64_t> make_seeds(std::uint64_t master, int count) {
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < count; ++i) seeds.push_back(derive_seed(master, static_cast<std::uint64_t>(i)));
    return seeds;
}

std::vector<std::pair<std::string, ProtocolFlags>> ablation_conditions() {
    auto f = [](bool overlay, bool red, bool varied) {
        ProtocolFlags p;
        p.overlay = overlay;
        p.red_light = red;
        p.varied_bg = varied;
        return p;
    };
    return {{"full", f(true, true, true)},          {"no_overlay", f(false, true, true)},
            {"no_red_light", f(true, false, true)}, {"overlay_only", f(true, false, false)},
            {"red_light_only", f(false, true, false)}, {"baseline", f(false, false, false)},
            {"no_varied_bg", f(true, true, false)}};
}

void PolicyCache::prepare(const std::vector<PolicyRequest>& requests) {
    // Group missing policies by dataset.
    std::map<std::string, std::vector<PolicyRequest>> groups;
    for (const auto& r : requests) {
        if (cache_.count(request_key(r))) continue;
        auto& g = groups[dataset_key(r)];
        if (std::none_of(g.begin(), g.end(), [&](const PolicyRequest& o) { return o.kind == r.kind; })) {
            g.push_back(r);
        }
    }
    std::vector<std::vector<PolicyRequest>> work;
    for (auto& [key, g] : groups) work.push_back(std::move(g));
    std::mutex mutex;
    parallel_for(static_cast<int>(work.size()), config_.jobs, [&](int i) {
        const auto& group = work[static_cast<std::size_t>(i)];
        const auto& first = group.front();
        HarnessConfig serial = config_;
        serial.jobs = 1;
        const auto samples = collect_samples(first.flags, first.episodes, first.seed, serial);
        for (const auto& r : group) {
            Rng init_rng(derive_seed(r.seed, kTrainTag));
            const PolicyParams init = init_policy(r.kind, init_rng, input_for(r.flags));
            TrainConfig tc = config_.train;
            tc.seed = derive_seed(r.seed, kTrainTag, 1);
            auto trained = train_on_samples(init, samples, tc);
            std::lock_guard lock(mutex);
            log(config_, "trained " + r.flags.label() + " " + std::string(policy_token(r.kind)) + " seed " +
                             std::to_string(r.seed) + " on " + std::to_string(r.episodes) + " episodes (" +
                             std::to_string(samples.size()) + " samples)");
            cache_[request_key(r)] = std::move(trained);
        }
    });
}

const PolicyParams& PolicyCache::get(const PolicyRequest& request) {
    auto it = cache_.find(request_key(request));
    if (it == cache_.end()) {
        prepare({request});
        it = cache_.find(request_key(request));
    }
    return it->second;
}

ResultTable run_ablation(const std::vector<std::uint64_t>& seeds, PolicyCache& cache) {
    std::vector<Cell> cells;
    const int episodes = cache.config().train_episodes;
    for (const auto& [name, flags] : ablation_conditions()) {
        for (auto kind : {PolicyKind::trainable_encoder, PolicyKind::frozen_encoder}) {
            for (auto seed : seeds) {
                for (auto env : {EnvClass::train, EnvClass::novel_similar}) {
                    cells.push_back({name, {flags, kind, seed, episodes}, env});
                }
            }
        }
    }
    return run_cells(cells, cache);
}

ResultTable run_transfer(const std::vector<std::uint64_t>& seeds, PolicyCache& cache) {
    std::vector<Cell> cells;
    const int episodes = cache.config().train_episodes;
    const std::vector<std::pair<std::string, ProtocolFlags>> rows{{"full", full_flags()},
                                                                  {"baseline", ProtocolFlags::none()}};
    for (const auto& [name, flags] : rows) {
        for (auto kind : {PolicyKind::trainable_encoder, PolicyKind::frozen_encoder}) {
            for (auto seed : seeds) {
                for (auto env : {EnvClass::train, EnvClass::novel_similar, EnvClass::novel_extreme}) {
                    cells.push_back({name, {flags, kind, seed, episodes}, env});
                }
            }
        }
    }
    return run_cells(cells, cache);
}

ResultTable run_wrist_ablation(const std::vector<std::uint64_t>& seeds, PolicyCache& cache) {
    std::vector<Cell> cells;
    const int episodes = cache.config().train_episodes;
    ProtocolFlags wrist = full_flags();
    wrist.wrist_camera = true;
    const std::vector<std::pair<std::string, ProtocolFlags>> rows{{"full", full_flags()}, {"full_wrist", wrist}};
    for (const auto& [name, flags] : rows) {
        for (auto kind : {PolicyKind::trainable_encoder, PolicyKind::frozen_encoder}) {
            for (auto seed : seeds) {
                for (auto env : {EnvClass::train, EnvClass::novel_similar}) {
                    cells.push_back({name, {flags, kind, seed, episodes}, env});
                }
            }
        }
    }
    return run_cells(cells, cache);
}

ResultTable run_data_efficiency(PolicyKind kind, const std::vector<int>& episode_counts,
                                const std::vector<std::uint64_t>& seeds, PolicyCache& cache) {
    std::vector<Cell> cells;
    for (int n : episode_counts) {
        if (n < 1) throw InvalidArgument("episode counts must be positive");
        for (auto seed : seeds) cells.push_back({"full_ep" + std::to_string(n), {full_flags(), kind, seed, n}, EnvClass::train});
    }
    return run_cells(cells, cache);
}

std::string_view to_string(Component c) {
    switch (c) {
    case Component::varied_bg: return "varied_bg";
    case Component::red_light: return "red_light";
    case Component::overlay: return "overlay";
    }
    return "?";
}

Ranking rank_by_drops(double varied_bg, double red_light, double overlay) {
    Ranking r;
    r.order = {Component::varied_bg, Component::red_light, Component::overlay};
    r.drops = {{Component::varied_bg, varied_bg}, {Component::red_light, red_light}, {Component::overlay, overlay}};
    std::stable_sort(r.order.begin(), r.order.end(),
                     [&](Component a, Component b) { return r.drops.at(a) > r.drops.at(b); });
    r.tie = varied_bg == red_light || varied_bg == overlay || red_light == overlay;
    return r;
}

Ranking rank_components(const ResultTable& table, std::optional<PolicyKind> policy,
                        std::optional<std::uint64_t> seed) {
    auto mean_for = [&](const std::string& condition) {
        double sum = 0.0;
        int n = 0;
        for (const auto& r : table) {
            if (r.condition != condition || r.flags.wrist_camera) continue;
            if (policy && r.policy != *policy) continue;
            if (seed && r.seed != *seed) continue;
            if (r.env == EnvClass::novel_extreme) continue;
            sum += r.success_rate();
            ++n;
        }
        if (n == 0) throw InvalidArgument("ablation table has no '" + condition + "' rows for the requested cells");
        return sum / n;
    };
    const double full = mean_for("full");
    return rank_by_drops(full - mean_for("no_varied_bg"), full - mean_for("no_red_light"),
                         full - mean_for("no_overlay"));
}

void write_csv(std::ostream& out, const ResultTable& table) {
    out << "condition,policy,env,overlay,red_light,varied_bg,wrist,seed,trials,successes,false_triggers\n";
    for (const auto& r : table) {
        out << r.condition << ',' << to_string(r.policy) << ',' << to_string(r.env) << ',' << int(r.flags.overlay)
            << ',' << int(r.flags.red_light) << ',' << int(r.flags.varied_bg) << ',' << int(r.flags.wrist_camera) << ','
            << r.seed << ',' << r.trials << ',' << r.successes << ',' << r.false_triggers << '\n';
    }
}

std::string to_csv(const ResultTable& table) {
    std::ostringstream out;
    write_csv(out, table);
    return out.str();
}

ResultTable parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) ||
        line != "condition,policy,env,overlay,red_light,varied_bg,wrist,seed,trials,successes,false_triggers") {
        throw FormatError("report CSV: missing or wrong header");
    }
    ResultTable table;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        const std::string where = "report CSV line " + std::to_string(lineno);
        if (f.size() != 11) throw FormatError(where + ": expected 11 columns");
        auto flag = [&](const std::string& s) {
            if (s != "0" && s != "1") throw FormatError(where + ": flag must be 0 or 1");
            return s == "1";
        };
        auto number = [&](const std::string& s) {
            std::size_t used = 0;
            unsigned long long v = 0;
            try {
                v = std::stoull(s, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (s.empty() || used != s.size()) throw FormatError(where + ": bad number '" + s + "'");
            return v;
        };
        ConditionResult r;
        r.condition = f[0];
        try {
            r.policy = policy_kind_from_string(f[1]);
            r.env = env_class_from_string(f[2]);
        } catch (const InvalidArgument& e) {
            throw FormatError(where + ": " + e.what());
        }
        r.flags.overlay = flag(f[3]);
        r.flags.red_light = flag(f[4]);
        r.flags.varied_bg = flag(f[5]);
        r.flags.wrist_camera = flag(f[6]);
        r.seed = number(f[7]);
        r.trials = static_cast<int>(number(f[8]));
        r.successes = static_cast<int>(number(f[9]));
        r.false_triggers = static_cast<int>(number(f[10]));
        if (r.successes + r.false_triggers > r.trials) throw FormatError(where + ": counts exceed trials");
        table.push_back(std::move(r));
    }
    return table;
}

double median_success(const ResultTable& table, const std::function<bool(const ConditionResult&)>& filter) {
    std::vector<double> v;
    for (const auto& r : table) {
        if (filter(r)) v.push_back(r.success_rate());
    }
    if (v.empty()) throw InvalidArgument("no table cells match the filter");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void check_calibration(const ResultTable& ablation) {
    const double m = median_success(ablation, [](const ConditionResult& r) {
        return r.condition == "baseline" && r.policy == PolicyKind::trainable_encoder && r.env == EnvClass::train;
    });
    if (m < 0.3 || m > 0.9) {
        throw CalibrationError("baseline trainable policy has median train-environment success " + std::to_string(m) +
                               ", outside [0.3, 0.9]; orderings would be vacuous");
    }
}

} // namespace sevo::harness
