#include "sevo/policy.hpp"

#include "sevo/error.hpp"
#include "sevo/pnm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <cstdlib>
#include <numeric>
#include <type_traits>

namespace sevo {

std::string_view to_string(PolicyKind kind) {
    switch (kind) {
    case PolicyKind::trainable_encoder: return "trainable_encoder";
    case PolicyKind::frozen_encoder: return "frozen_encoder";
    }
    return "?";
}

PolicyKind policy_kind_from_string(std::string_view name) {
    if (name == "trainable_encoder" || name == "trainable") return PolicyKind::trainable_encoder;
    if (name == "frozen_encoder" || name == "frozen") return PolicyKind::frozen_encoder;
    throw InvalidArgument("unknown policy kind '" + std::string(name) + "'");
}

namespace {

constexpr std::array<const char*, 6> kTensorNames{"encoder.weight", "encoder.bias", "head1.weight",
                                                  "head1.bias",     "head2.weight", "head2.bias"};
constexpr float kWorldScale = 64.0f;
// Input scale for joint readings.
constexpr double kJointGain = 12.0;

// Borrowed view of the six tensors in some scalar type.
template <typename T>
struct Net {
    int in = 0;
    int hidden = kHidden;
    int out = 0;
    const T* w1;
    const T* b1;
    const T* w2;
    const T* b2;
    const T* w3;
    const T* b3;
};

template <typename T>
struct Activations {
    std::vector<T> h1, h2, y;
};

template <typename T>
T activate(T v, Activation a) {
    return a == Activation::tanh ? std::tanh(v) : v;
}

template <typename T>
T activate_grad(T activated, Activation a) {
    return a == Activation::tanh ? T(1) - activated * activated : T(1);
}

// Dot product with independent partial sums so the compiler can vectorize it
// without reassociating a single accumulator.
template <typename T>
T dot(const T* a, const T* b, int n) {
    T acc[8] = {};
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        for (int k = 0; k < 8; ++k) acc[k] += a[i + k] * b[i + k];
    }
    T s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

template <typename T, typename In>
void encoder_forward(const Net<T>& net, const In* x, T* h1, Activation act) {
    for (int j = 0; j < net.hidden; ++j) {
        const T* row = net.w1 + static_cast<std::size_t>(j) * net.in;
        T s;
        if constexpr (std::is_same_v<T, In>) {
            s = dot(row, x, net.in);
        } else {
            s = 0;
            for (int i = 0; i < net.in; ++i) s += row[i] * static_cast<T>(x[i]);
        }
        h1[j] = activate(s + net.b1[j], act);
    }
}

template <typename T>
void head_forward(const Net<T>& net, const T* h1, T* h2, T* y, Activation act) {
    for (int j = 0; j < net.hidden; ++j) {
        h2[j] = activate(dot(net.w2 + static_cast<std::size_t>(j) * net.hidden, h1, net.hidden) + net.b2[j], act);
    }
    for (int k = 0; k < net.out; ++k) {
        y[k] = dot(net.w3 + static_cast<std::size_t>(k) * net.hidden, h2, net.hidden) + net.b3[k];
    }
}

template <typename T>
Net<T> make_net(const std::vector<std::vector<T>>& t, const PolicyParams& p) {
    Net<T> n;
    n.in = p.input.size();
    n.out = p.chunk_len * kActionDim;
    n.w1 = t[0].data();
    n.b1 = t[1].data();
    n.w2 = t[2].data();
    n.b2 = t[3].data();
    n.w3 = t[4].data();
    n.b3 = t[5].data();
    return n;
}

template <typename T>
std::vector<std::vector<T>> tensor_values(const PolicyParams& p) {
    std::vector<std::vector<T>> out;
    out.reserve(p.tensors.size());
    for (const auto& t : p.tensors) out.emplace_back(t.values.begin(), t.values.end());
    return out;
}

void check_input(const PolicyParams& p, std::size_t size) {
    if (size != static_cast<std::size_t>(p.input.size())) {
        throw ShapeError("policy expects " + std::to_string(p.input.size()) + " inputs (" +
                         std::to_string(p.input.cameras) + " cameras), got " + std::to_string(size));
    }
}

// Batch loss and, optionally, accumulated gradients (same layout as tensors).
template <typename T>
T batch_loss_and_grad(const PolicyParams& p, const std::vector<std::vector<T>>& values, std::span<const Sample> batch,
                      std::vector<std::vector<T>>* grads, Activation act) {
    const Net<T> net = make_net(values, p);
    const int H = net.hidden;
    const int O = net.out;
    std::vector<T> h1(H), h2(H), y(O), dy(O), d2(H), d1(H);
    if (grads) {
        grads->resize(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) (*grads)[i].assign(values[i].size(), T(0));
    }
    const bool enc_frozen = p.tensors[0].frozen;
    const T norm = T(1) / static_cast<T>(batch.size() * static_cast<std::size_t>(O));
    T loss = 0;
    for (const auto& s : batch) {
        check_input(p, s.input.size());
        if (s.target.size() != static_cast<std::size_t>(O)) throw ShapeError("sample target has wrong length");
        encoder_forward(net, s.input.data(), h1.data(), act);
        head_forward(net, h1.data(), h2.data(), y.data(), act);
        for (int k = 0; k < O; ++k) {
            const T e = y[k] - static_cast<T>(s.target[k]);
            loss += e * e * norm;
            dy[k] = T(2) * e * norm;
        }
        if (!grads) continue;
        auto& g = *grads;
        for (int k = 0; k < O; ++k) {
            T* gw = &g[4][static_cast<std::size_t>(k) * H];
            for (int j = 0; j < H; ++j) gw[j] += dy[k] * h2[j];
            g[5][k] += dy[k];
        }
        for (int j = 0; j < H; ++j) {
            T s2 = 0;
            for (int k = 0; k < O; ++k) s2 += net.w3[static_cast<std::size_t>(k) * H + j] * dy[k];
            d2[j] = s2 * activate_grad(h2[j], act);
        }
        for (int j = 0; j < H; ++j) {
            T* gw = &g[2][static_cast<std::size_t>(j) * H];
            for (int i = 0; i < H; ++i) gw[i] += d2[j] * h1[i];
            g[3][j] += d2[j];
        }
        if (enc_frozen) continue;
        for (int i = 0; i < H; ++i) {
            T s1 = 0;
            for (int j = 0; j < H; ++j) s1 += net.w2[static_cast<std::size_t>(j) * H + i] * d2[j];
            d1[i] = s1 * activate_grad(h1[i], act);
        }
        for (int j = 0; j < H; ++j) {
            T* gw = &g[0][static_cast<std::size_t>(j) * net.in];
            const T dj = d1[j];
            for (int i = 0; i < net.in; ++i) gw[i] += dj * static_cast<T>(s.input[i]);
            g[1][j] += dj;
        }
    }
    if (grads) {
        for (std::size_t i = 0; i < p.tensors.size(); ++i) {
            if (p.tensors[i].frozen) std::fill((*grads)[i].begin(), (*grads)[i].end(), T(0));
        }
    }
    return loss;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(out, v);
}

class Reader {
public:
    Reader(std::span<const std::uint8_t> bytes, std::string source) : bytes_(bytes), source_(std::move(source)) {}

    std::uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    float f32() {
        const std::uint32_t v = u32();
        float f;
        std::memcpy(&f, &v, 4);
        return f;
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == bytes_.size(); }
    [[noreturn]] void fail(const std::string& what) const { throw FormatError(source_ + ": " + what); }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) fail("truncated policy file at byte " + std::to_string(pos_));
    }

    std::span<const std::uint8_t> bytes_;
    std::string source_;
    std::size_t pos_ = 0;
};

} // namespace

std::size_t PolicyParams::parameter_count() const {
    return std::accumulate(tensors.begin(), tensors.end(), std::size_t{0},
                           [](std::size_t a, const Tensor& t) { return a + t.size(); });
}

std::size_t PolicyParams::trainable_count() const {
    return std::accumulate(tensors.begin(), tensors.end(), std::size_t{0},
                           [](std::size_t a, const Tensor& t) { return a + (t.frozen ? 0 : t.size()); });
}

double PolicyParams::trainable_fraction() const {
    const auto total = parameter_count();
    return total == 0 ? 0.0 : static_cast<double>(trainable_count()) / static_cast<double>(total);
}

const Tensor& PolicyParams::tensor(std::string_view name) const {
    for (const auto& t : tensors) {
        if (t.name == name) return t;
    }
    throw InvalidArgument("policy has no tensor '" + std::string(name) + "'");
}

Tensor& PolicyParams::tensor(std::string_view name) {
    return const_cast<Tensor&>(static_cast<const PolicyParams&>(*this).tensor(name));
}

void PolicyParams::validate() const {
    if (chunk_len < 1) throw InvalidArgument("chunk_len must be positive");
    if (input.cameras < 1 || input.joint_dim < 1) throw InvalidArgument("policy input spec is empty");
    const std::uint32_t in = static_cast<std::uint32_t>(input.size());
    const std::uint32_t h = kHidden;
    const std::uint32_t out = static_cast<std::uint32_t>(chunk_len * kActionDim);
    const std::array<std::vector<std::uint32_t>, 6> dims{
        std::vector<std::uint32_t>{h, in}, {h}, {h, h}, {h}, {out, h}, {out}};
    if (tensors.size() != kTensorNames.size()) throw ShapeError("policy must have 6 tensors");
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        const auto& t = tensors[i];
        if (t.name != kTensorNames[i]) throw ShapeError("tensor " + std::to_string(i) + " must be " + kTensorNames[i]);
        if (t.dims != dims[i]) throw ShapeError("tensor " + t.name + " has the wrong shape");
        std::size_t n = 1;
        for (auto d : t.dims) n *= d;
        if (t.values.size() != n) throw ShapeError("tensor " + t.name + " value count does not match its shape");
        for (float v : t.values) {
            if (!std::isfinite(v)) throw InvalidArgument("tensor " + t.name + " holds a non-finite value");
        }
    }
    const bool want_frozen = kind == PolicyKind::frozen_encoder;
    if (tensors[0].frozen != want_frozen || tensors[1].frozen != want_frozen) {
        throw InvalidArgument("encoder frozen flags do not match the policy kind");
    }
    for (std::size_t i = 2; i < tensors.size(); ++i) {
        if (tensors[i].frozen) throw InvalidArgument("head tensors are never frozen");
    }
}

PolicyParams init_policy(PolicyKind kind, Rng& rng, InputSpec input, int chunk_len) {
    PolicyParams p;
    p.kind = kind;
    p.chunk_len = chunk_len;
    p.input = input;
    const std::uint32_t in = static_cast<std::uint32_t>(input.size());
    const std::uint32_t h = kHidden;
    const std::uint32_t out = static_cast<std::uint32_t>(chunk_len * kActionDim);
    const bool frozen = kind == PolicyKind::frozen_encoder;
    auto layer = [&](const char* wname, const char* bname, std::uint32_t fan_out, std::uint32_t fan_in, bool fz) {
        Tensor w{wname, {fan_out, fan_in}, std::vector<float>(static_cast<std::size_t>(fan_out) * fan_in), fz};
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (auto& v : w.values) v = static_cast<float>(rng.uniform(-limit, limit));
        Tensor b{bname, {fan_out}, std::vector<float>(fan_out, 0.0f), fz};
        p.tensors.push_back(std::move(w));
        p.tensors.push_back(std::move(b));
    };
    layer(kTensorNames[0], kTensorNames[1], h, in, frozen);
    layer(kTensorNames[2], kTensorNames[3], h, h, false);
    layer(kTensorNames[4], kTensorNames[5], out, h, false);
    return p;
}

std::vector<float> encode_observation(std::span<const Frame> frames, const JointState& joints,
                                      const InputSpec& spec) {
    if (frames.size() != static_cast<std::size_t>(spec.cameras)) {
        throw ShapeError("policy expects " + std::to_string(spec.cameras) + " cameras, got " +
                         std::to_string(frames.size()));
    }
    if (joints.joints.size() != static_cast<std::size_t>(spec.joint_dim)) {
        throw ShapeError("policy expects " + std::to_string(spec.joint_dim) + " joints, got " +
                         std::to_string(joints.joints.size()));
    }
    std::vector<float> x;
    x.reserve(static_cast<std::size_t>(spec.size()));
    for (const auto& f : frames) {
        const auto cells = downsample_area_mean(f, kDownsample);
        // Pixels are centered so the encoder sees zero-mean inputs.
        for (float v : cells) x.push_back(2.0f * v - 1.0f);
    }
    for (std::size_t i = 0; i < joints.joints.size(); ++i) {
        const double v = joints.joints[i];
        const double unit = i < 2 ? v / kWorldScale : v;
        x.push_back(static_cast<float>((2.0 * unit - 1.0) * kJointGain));
    }
    return x;
}

std::vector<float> encode_observation(const VirtualObservation& obs, const InputSpec& spec) {
    return encode_observation(std::span<const Frame>(obs.frames), obs.joint_state, spec);
}

void encode_action(const Action& action, std::span<float> out) {
    out[0] = static_cast<float>(action.dx / 2.0);
    out[1] = static_cast<float>(action.dy / 2.0);
    out[2] = static_cast<float>(action.grip_cmd);
}

Action decode_action(std::span<const float> in) {
    return {2.0 * in[0], 2.0 * in[1], static_cast<double>(in[2])};
}

std::vector<Action> forward(const PolicyParams& params, std::span<const float> input) {
    check_input(params, input.size());
    Net<float> net;
    net.in = params.input.size();
    net.out = params.chunk_len * kActionDim;
    net.w1 = params.tensors[0].values.data();
    net.b1 = params.tensors[1].values.data();
    net.w2 = params.tensors[2].values.data();
    net.b2 = params.tensors[3].values.data();
    net.w3 = params.tensors[4].values.data();
    net.b3 = params.tensors[5].values.data();
    std::vector<float> h1(kHidden), h2(kHidden), y(static_cast<std::size_t>(net.out));
    encoder_forward(net, input.data(), h1.data(), Activation::tanh);
    head_forward(net, h1.data(), h2.data(), y.data(), Activation::tanh);
    std::vector<Action> chunk;
    chunk.reserve(static_cast<std::size_t>(params.chunk_len));
    for (int c = 0; c < params.chunk_len; ++c) {
        chunk.push_back(decode_action(std::span<const float>(y).subspan(static_cast<std::size_t>(c) * kActionDim, 3)));
    }
    return chunk;
}

std::vector<Action> forward(const PolicyParams& params, const VirtualObservation& obs) {
    return forward(params, encode_observation(obs, params.input));
}

void TrainConfig::validate() const {
    if (steps < 0) throw InvalidArgument("training steps must be non-negative");
    if (batch < 1) throw InvalidArgument("batch size must be positive");
    if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must lie in [0, 1)");
}

std::vector<Sample> make_samples(const std::vector<EpisodeRecord>& episodes, const InputSpec& spec, int chunk_len) {
    std::vector<Sample> samples;
    for (const auto& ep : episodes) {
        const bool null_episode = !ep.meta.scene.bottle.has_value();
        const auto& steps = ep.steps;
        for (std::size_t t = 0; t < steps.size(); ++t) {
            if (!null_episode && steps[t].phase != GatePhase::armed) continue;
            Sample s;
            s.input = encode_observation(std::span<const Frame>(steps[t].sevo), steps[t].joints, spec);
            s.target.resize(static_cast<std::size_t>(chunk_len) * kActionDim);
            for (int c = 0; c < chunk_len; ++c) {
                Action a;
                a = t + c < steps.size() ? steps[t + c].action : steps.back().action;
                encode_action(a, std::span<float>(s.target).subspan(static_cast<std::size_t>(c) * kActionDim, 3));
            }
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

double evaluate_loss(const PolicyParams& params, std::span<const Sample> batch, Activation activation) {
    if (batch.empty()) return 0.0;
    return batch_loss_and_grad<double>(params, tensor_values<double>(params), batch, nullptr, activation);
}

std::vector<std::vector<double>> compute_gradients(const PolicyParams& params, std::span<const Sample> batch,
                                                   Activation activation) {
    std::vector<std::vector<double>> grads;
    batch_loss_and_grad<double>(params, tensor_values<double>(params), batch, &grads, activation);
    return grads;
}

double grad_check(const PolicyParams& params, std::span<const Sample> batch, std::uint64_t seed, int coordinates,
                  Activation activation) {
    constexpr double h = 1e-4;
    auto values = tensor_values<double>(params);
    std::vector<std::vector<double>> analytic;
    batch_loss_and_grad<double>(params, values, batch, &analytic, activation);
    std::vector<std::size_t> trainable;
    std::size_t total = 0;
    for (std::size_t i = 0; i < params.tensors.size(); ++i) {
        if (!params.tensors[i].frozen) {
            trainable.push_back(i);
            total += params.tensors[i].size();
        }
    }
    if (total == 0) return 0.0;
    Rng rng(seed);
    double worst = 0.0;
    for (int c = 0; c < coordinates; ++c) {
        auto flat = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(total) - 1));
        std::size_t ti = 0;
        for (auto idx : trainable) {
            if (flat < params.tensors[idx].size()) {
                ti = idx;
                break;
            }
            flat -= params.tensors[idx].size();
        }
        double& w = values[ti][flat];
        const double saved = w;
        w = saved + h;
        const double plus = batch_loss_and_grad<double>(params, values, batch, nullptr, activation);
        w = saved - h;
        const double minus = batch_loss_and_grad<double>(params, values, batch, nullptr, activation);
        w = saved;
        const double numeric = (plus - minus) / (2.0 * h);
        const double a = analytic[ti][flat];
        worst = std::max(worst, std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric)));
    }
    return worst;
}

namespace {

// Encoder activations for every sample, used when the encoder is frozen so
// training only has to run the head.
std::vector<float> frozen_features(const PolicyParams& p, std::span<const Sample> samples) {
    Net<float> net;
    net.in = p.input.size();
    net.out = p.chunk_len * kActionDim;
    net.w1 = p.tensors[0].values.data();
    net.b1 = p.tensors[1].values.data();
    std::vector<float> feats(samples.size() * kHidden);
    for (std::size_t s = 0; s < samples.size(); ++s) {
        encoder_forward(net, samples[s].input.data(), &feats[s * kHidden], Activation::tanh);
    }
    return feats;
}

} // namespace

PolicyParams train_on_samples(const PolicyParams& params, std::span<const Sample> samples, const TrainConfig& config) {
    config.validate();
    params.validate();
    if (samples.empty()) throw InvalidArgument("cannot train on an empty dataset");
    for (const auto& s : samples) check_input(params, s.input.size());
    PolicyParams p = params;
    if (config.steps == 0) return p;

    const int H = kHidden;
    const int O = p.chunk_len * kActionDim;
    const int in = p.input.size();
    const bool enc_frozen = p.tensors[0].frozen;
    const std::vector<float> features = enc_frozen ? frozen_features(p, samples) : std::vector<float>{};

    std::vector<std::vector<float>> grads(p.tensors.size()), velocity(p.tensors.size());
    for (std::size_t i = 0; i < p.tensors.size(); ++i) {
        grads[i].assign(p.tensors[i].size(), 0.0f);
        velocity[i].assign(p.tensors[i].size(), 0.0f);
    }
    std::vector<float> h1(H), h2(H), y(O), dy(O), d2(H), d1(H);
    std::vector<std::size_t> batch(static_cast<std::size_t>(config.batch));
    Rng rng(config.seed);
    const float lr = static_cast<float>(config.learning_rate);
    const float mu = static_cast<float>(config.momentum);
    const float norm = 1.0f / static_cast<float>(config.batch * O);

    for (int step = 0; step < config.steps; ++step) {
        for (auto& b : batch) b = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(samples.size()) - 1));
        for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0f);
        Net<float> net;
        net.in = in;
        net.out = O;
        net.w1 = p.tensors[0].values.data();
        net.b1 = p.tensors[1].values.data();
        net.w2 = p.tensors[2].values.data();
        net.b2 = p.tensors[3].values.data();
        net.w3 = p.tensors[4].values.data();
        net.b3 = p.tensors[5].values.data();
        for (auto idx : batch) {
            const auto& s = samples[idx];
            if (enc_frozen) {
                std::copy_n(&features[idx * H], H, h1.begin());
            } else {
                encoder_forward(net, s.input.data(), h1.data(), Activation::tanh);
            }
            head_forward(net, h1.data(), h2.data(), y.data(), Activation::tanh);
            for (int k = 0; k < O; ++k) dy[k] = 2.0f * (y[k] - s.target[k]) * norm;
            for (int k = 0; k < O; ++k) {
                float* gw = &grads[4][static_cast<std::size_t>(k) * H];
                for (int j = 0; j < H; ++j) gw[j] += dy[k] * h2[j];
                grads[5][k] += dy[k];
            }
            for (int j = 0; j < H; ++j) {
                float s2 = 0.0f;
                for (int k = 0; k < O; ++k) s2 += net.w3[static_cast<std::size_t>(k) * H + j] * dy[k];
                d2[j] = s2 * (1.0f - h2[j] * h2[j]);
            }
            for (int j = 0; j < H; ++j) {
                float* gw = &grads[2][static_cast<std::size_t>(j) * H];
                for (int i = 0; i < H; ++i) gw[i] += d2[j] * h1[i];
                grads[3][j] += d2[j];
            }
            if (enc_frozen) continue;
            for (int i = 0; i < H; ++i) {
                float s1 = 0.0f;
                for (int j = 0; j < H; ++j) s1 += net.w2[static_cast<std::size_t>(j) * H + i] * d2[j];
                d1[i] = s1 * (1.0f - h1[i] * h1[i]);
            }
            for (int j = 0; j < H; ++j) {
                float* gw = &grads[0][static_cast<std::size_t>(j) * in];
                const float dj = d1[j];
                const float* x = s.input.data();
                for (int i = 0; i < in; ++i) gw[i] += dj * x[i];
                grads[1][j] += dj;
            }
        }
        for (std::size_t t = 0; t < p.tensors.size(); ++t) {
            if (p.tensors[t].frozen) continue;
            auto& v = velocity[t];
            auto& w = p.tensors[t].values;
            const auto& g = grads[t];
            for (std::size_t i = 0; i < w.size(); ++i) {
                v[i] = mu * v[i] + g[i];
                w[i] -= lr * v[i];
            }
        }
    }
    return p;
}

PolicyParams train(const PolicyParams& params, const std::vector<EpisodeRecord>& dataset, const TrainConfig& config) {
    if (dataset.empty()) throw InvalidArgument("cannot train on an empty dataset");
    const auto samples = make_samples(dataset, params.input, params.chunk_len);
    if (samples.empty()) throw InvalidArgument("dataset contains no trainable steps");
    return train_on_samples(params, samples, config);
}

std::vector<std::uint8_t> encode_policy(const PolicyParams& params) {
    params.validate();
    std::vector<std::uint8_t> out{'S', 'E', 'V', 'P'};
    out.push_back(static_cast<std::uint8_t>(params.kind));
    out.push_back(static_cast<std::uint8_t>(params.chunk_len));
    put_u32(out, static_cast<std::uint32_t>(params.tensors.size()));
    for (const auto& t : params.tensors) {
        out.push_back(static_cast<std::uint8_t>(t.name.size()));
        out.insert(out.end(), t.name.begin(), t.name.end());
        out.push_back(t.frozen ? 1 : 0);
        put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
        for (auto d : t.dims) put_u32(out, d);
        for (float v : t.values) put_f32(out, v);
    }
    return out;
}

PolicyParams decode_policy(std::span<const std::uint8_t> bytes, const std::string& source) {
    Reader r(bytes, source);
    if (r.str(4) != "SEVP") r.fail("bad magic, expected SEVP");
    PolicyParams p;
    const auto kind = r.u8();
    if (kind > 1) r.fail("unknown policy kind " + std::to_string(kind));
    p.kind = static_cast<PolicyKind>(kind);
    p.chunk_len = r.u8();
    const auto count = r.u32();
    if (count > 64) r.fail("implausible tensor count " + std::to_string(count));
    for (std::uint32_t i = 0; i < count; ++i) {
        Tensor t;
        t.name = r.str(r.u8());
        const auto frozen = r.u8();
        if (frozen > 1) r.fail("tensor " + t.name + ": frozen flag must be 0 or 1");
        t.frozen = frozen == 1;
        const auto rank = r.u32();
        if (rank > 8) r.fail("tensor " + t.name + ": implausible rank");
        std::size_t n = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            t.dims.push_back(r.u32());
            n *= t.dims.back();
            if (n > (std::size_t{1} << 28)) r.fail("tensor " + t.name + ": implausible size");
        }
        t.values.resize(n);
        for (auto& v : t.values) v = r.f32();
        p.tensors.push_back(std::move(t));
    }
    if (!r.done()) r.fail("trailing bytes after last tensor");
    if (p.tensors.empty() || p.tensors[0].dims.size() != 2) r.fail("missing encoder weight");
    const int in = static_cast<int>(p.tensors[0].dims[1]);
    const int per_camera = kDownsample * kDownsample * 3;
    p.input.joint_dim = kActionDim;
    if ((in - p.input.joint_dim) <= 0 || (in - p.input.joint_dim) % per_camera != 0) {
        r.fail("encoder input width " + std::to_string(in) + " does not match any camera count");
    }
    p.input.cameras = (in - p.input.joint_dim) / per_camera;
    try {
        p.validate();
    } catch (const Error& e) {
        r.fail(e.what());
    }
    return p;
}

void save_policy(const std::filesystem::path& path, const PolicyParams& params) {
    pnm::write_file(path, encode_policy(params));
}

PolicyParams load_policy(const std::filesystem::path& path) {
    return decode_policy(pnm::read_file(path), path.string());
}

} // namespace sevo
