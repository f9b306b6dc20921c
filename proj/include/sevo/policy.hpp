#pragma once

#include "sevo/episode.hpp"
#include "sevo/observation.hpp"
#include "sevo/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sevo {

enum class PolicyKind : std::uint8_t { trainable_encoder = 0, frozen_encoder = 1 };

std::string_view to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(std::string_view name);

// Hidden nonlinearity. Policies use tanh; identity exists for checking the
// gradient code on a purely linear network.
enum class Activation { tanh, identity };

inline constexpr int kDownsample = 16;
inline constexpr int kHidden = 64;
inline constexpr int kDefaultChunk = 4;

// Layout of the flat policy input: per camera a 16 x 16 x 3 area-mean image in
// [0, 1], then the joint state normalized by the workspace size (aperture is
// already in [0, 1]).
struct InputSpec {
    int cameras = 2;
    int joint_dim = 3;

    int size() const { return cameras * kDownsample * kDownsample * 3 + joint_dim; }
    friend bool operator==(const InputSpec&, const InputSpec&) = default;
};

struct Tensor {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::vector<float> values;
    bool frozen = false;

    std::size_t size() const { return values.size(); }
    friend bool operator==(const Tensor&, const Tensor&) = default;
};

// Encoder (input -> 64, tanh) followed by a two-layer head
// (64 -> 64, tanh -> chunk_len * 3). Tensors are stored in that order as
// weight/bias pairs.
struct PolicyParams {
    PolicyKind kind = PolicyKind::trainable_encoder;
    int chunk_len = kDefaultChunk;
    InputSpec input;
    std::vector<Tensor> tensors;

    std::size_t parameter_count() const;
    std::size_t trainable_count() const;
    double trainable_fraction() const;

    const Tensor& tensor(std::string_view name) const;
    Tensor& tensor(std::string_view name);

    // Checks names, shapes, frozen flags and finiteness.
    void validate() const;

    friend bool operator==(const PolicyParams&, const PolicyParams&) = default;
};

PolicyParams init_policy(PolicyKind kind, Rng& rng, InputSpec input = {}, int chunk_len = kDefaultChunk);

// Flattens an observation into the policy input vector.
std::vector<float> encode_observation(const VirtualObservation& obs, const InputSpec& spec);
std::vector<float> encode_observation(std::span<const Frame> frames, const JointState& joints, const InputSpec& spec);

// Predicted chunk of `chunk_len` actions. Throws ShapeError on input mismatch.
std::vector<Action> forward(const PolicyParams& params, const VirtualObservation& obs);
std::vector<Action> forward(const PolicyParams& params, std::span<const float> input);

// Network targets are actions scaled to roughly [-1, 1]: (dx/2, dy/2, grip).
void encode_action(const Action& action, std::span<float> out);
Action decode_action(std::span<const float> in);

struct Sample {
    std::vector<float> input;
    std::vector<float> target;  // chunk_len * 3
};

struct TrainConfig {
    int steps = 2000;
    int batch = 32;
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::uint64_t seed = 0;

    void validate() const;
};

// Training windows from demonstrations: every step taken while the gate was
// armed, plus every step of null-scene episodes. Targets are the next
// `chunk_len` actions, padded by repeating the last recorded action.
std::vector<Sample> make_samples(const std::vector<EpisodeRecord>& episodes, const InputSpec& spec, int chunk_len);

// Mean squared error over a batch.
double evaluate_loss(const PolicyParams& params, std::span<const Sample> batch,
                     Activation activation = Activation::tanh);

// Minibatch SGD with momentum on the MSE loss. Frozen tensors are never touched.
PolicyParams train(const PolicyParams& params, const std::vector<EpisodeRecord>& dataset, const TrainConfig& config);
PolicyParams train_on_samples(const PolicyParams& params, std::span<const Sample> samples, const TrainConfig& config);

// Analytic gradient of the batch MSE, one vector per tensor. Frozen tensors get
// exact zeros.
std::vector<std::vector<double>> compute_gradients(const PolicyParams& params, std::span<const Sample> batch,
                                                   Activation activation = Activation::tanh);

// Max relative error between analytic and central-difference gradients
// (h = 1e-4, double precision) over `coordinates` random trainable coordinates:
// max |a - n| / max(1e-8, |a| + |n|).
double grad_check(const PolicyParams& params, std::span<const Sample> batch, std::uint64_t seed = 0,
                  int coordinates = 64, Activation activation = Activation::tanh);

// Binary PolicyParams file:
//   "SEVP" | kind u8 | chunk_len u8 | tensor count u32 LE | per tensor:
//   name_len u8, name, frozen u8, rank u32 LE, dims u32 LE each, values f32 LE.
std::vector<std::uint8_t> encode_policy(const PolicyParams& params);
PolicyParams decode_policy(std::span<const std::uint8_t> bytes, const std::string& source = "<memory>");
void save_policy(const std::filesystem::path& path, const PolicyParams& params);
PolicyParams load_policy(const std::filesystem::path& path);

} // namespace sevo
