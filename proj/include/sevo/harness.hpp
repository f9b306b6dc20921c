#pragma once

#include "sevo/detector.hpp"
#include "sevo/episode.hpp"
#include "sevo/policy.hpp"
#include "sevo/protocol.hpp"
#include "sevo/rng.hpp"
#include "sevo/safety_gate.hpp"
#include "sevo/scene.hpp"
#include "sevo/sim_env.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace sevo::harness {

// Experiment-wide constants. Defaults are the calibrated desk-scale setup.
struct HarnessConfig {
    int train_episodes = 80;
    int eval_trials = 100;
    TrainConfig train;
    GateConfig gate;
    DetectorNoise noise{0.2, 1, 0.05};
    OverlayConfig overlay;
    // Worker threads for independent cells; 0 = hardware concurrency.
    int jobs = 0;
    // Progress lines go here when set.
    std::function<void(const std::string&)> log;
};

struct ConditionResult {
    std::string condition;
    ProtocolFlags flags;
    PolicyKind policy = PolicyKind::trainable_encoder;
    EnvClass env = EnvClass::train;
    int trials = 0;
    int successes = 0;
    int false_triggers = 0;
    std::uint64_t seed = 0;

    // Null-scene trials are counted only for false triggers.
    int null_trials() const;
    int bottle_trials() const { return trials - null_trials(); }
    double success_rate() const;

    friend bool operator==(const ConditionResult&, const ConditionResult&) = default;
};

// Trial i of an evaluation is a null scene iff i % 10 == 9.
bool is_null_trial(int index);
int null_trial_count(int trials);

// Episode i is a null episode iff null episodes are enabled and i % 10 == 9.
bool is_null_episode(const ProtocolFlags& flags, int index);

std::vector<EpisodeRecord> build_dataset(const ProtocolFlags& flags, int n_episodes, std::uint64_t seed,
                                         const HarnessConfig& config = {});

// Anything that maps an observation to an action chunk. The rollout queries it
// once per chunk.
using Controller = std::function<std::vector<Action>(const VirtualObservation&, const EnvState&)>;

Controller policy_controller(const PolicyParams& params);
// Scripted oracle, ignoring the observation.
Controller oracle_controller();

struct RolloutResult {
    Outcome outcome = Outcome::timeout;
    int steps = 0;
    int queries = 0;
};

struct RolloutOptions {
    // When false, the gate is bypassed and the controller acts from step 0.
    bool gated = true;
    int chunk_len = kDefaultChunk;
    int max_steps = kMaxSteps;
};

// Closed loop: render -> mock_detect -> select_target -> gate -> overlay ->
// controller chunk -> step, until the outcome is decided or max_steps.
RolloutResult rollout(const SceneSpec& scene, const Controller& controller, const ProtocolFlags& flags,
                      const HarnessConfig& config, const RolloutOptions& options, Rng& rng);

// Evaluation scenes depend only on (seed, env, trial index), so every policy
// evaluated with the same seed sees the same scenes.
ConditionResult evaluate_controller(const Controller& controller, int chunk_len, const ProtocolFlags& flags,
                                    EnvClass env, int n_trials, std::uint64_t seed, const HarnessConfig& config);
std::vector<ConditionResult> evaluate(const PolicyParams& policy, const ProtocolFlags& flags, EnvClass env,
                                      int n_trials, const std::vector<std::uint64_t>& seeds,
                                      const HarnessConfig& config);

std::vector<std::uint64_t> make_seeds(std::uint64_t master, int count);

// Rows of the component ablation. The six published rows plus the row with only
// background variation removed, which component ranking needs.
std::vector<std::pair<std::string, ProtocolFlags>> ablation_conditions();

struct PolicyRequest {
    ProtocolFlags flags;
    PolicyKind kind = PolicyKind::trainable_encoder;
    std::uint64_t seed = 0;
    int episodes = 80;
};

// Trains one policy per (flags, kind, seed, episodes) and caches it, so
// experiments that share a cell train it once. Demonstrations are converted to
// training samples as they are generated and never held in full.
class PolicyCache {
public:
    explicit PolicyCache(HarnessConfig config) : config_(std::move(config)) {}

    // Trains every missing policy, sharing one dataset between requests that
    // differ only in policy kind. Independent datasets run on config().jobs threads.
    void prepare(const std::vector<PolicyRequest>& requests);
    const PolicyParams& get(const PolicyRequest& request);
    const PolicyParams& get(const ProtocolFlags& flags, PolicyKind kind, std::uint64_t seed, int episodes) {
        return get(PolicyRequest{flags, kind, seed, episodes});
    }
    std::size_t size() const { return cache_.size(); }
    const HarnessConfig& config() const { return config_; }

private:
    HarnessConfig config_;
    std::map<std::string, PolicyParams> cache_;
};

// Training samples for a protocol, generated episode by episode.
std::vector<Sample> collect_samples(const ProtocolFlags& flags, int n_episodes, std::uint64_t seed,
                                    const HarnessConfig& config, int chunk_len = kDefaultChunk);

// Runs fn(0) ... fn(n - 1) on up to `jobs` threads (0 = hardware concurrency).
// The first exception is rethrown after all workers stop.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

using ResultTable = std::vector<ConditionResult>;

ResultTable run_ablation(const std::vector<std::uint64_t>& seeds, PolicyCache& cache);
ResultTable run_transfer(const std::vector<std::uint64_t>& seeds, PolicyCache& cache);
ResultTable run_wrist_ablation(const std::vector<std::uint64_t>& seeds, PolicyCache& cache);
ResultTable run_data_efficiency(PolicyKind kind, const std::vector<int>& episode_counts,
                                const std::vector<std::uint64_t>& seeds, PolicyCache& cache);

enum class Component { varied_bg, red_light, overlay };
std::string_view to_string(Component c);

struct Ranking {
    std::vector<Component> order;       // most important first
    std::map<Component, double> drops;  // success drop when removed from full SEVO
    bool tie = false;                   // some drops were equal
};

// Orders components by the success drop when each alone is removed from full
// SEVO. Equal drops keep the declared order varied_bg, red_light, overlay.
Ranking rank_by_drops(double varied_bg, double red_light, double overlay);

// Drops are computed from mean success rates over the matching table cells
// (optionally filtered by policy and seed). Throws InvalidArgument when the
// full-SEVO row or one of the single-removal rows is missing.
Ranking rank_components(const ResultTable& table, std::optional<PolicyKind> policy = std::nullopt,
                        std::optional<std::uint64_t> seed = std::nullopt);

// Report CSV: condition,policy,env,overlay,red_light,varied_bg,wrist,seed,
// trials,successes,false_triggers with LF endings.
void write_csv(std::ostream& out, const ResultTable& table);
std::string to_csv(const ResultTable& table);
ResultTable parse_csv(const std::string& text);

// Median success rate over the cells matching the filter.
double median_success(const ResultTable& table, const std::function<bool(const ConditionResult&)>& filter);

// Aborts with CalibrationError unless the no-SEVO trainable baseline's median
// train-environment success lies in [0.3, 0.9].
void check_calibration(const ResultTable& ablation);

} // namespace sevo::harness
