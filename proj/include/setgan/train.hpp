#pragma once

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "setgan/core/errors.hpp"
#include "setgan/core/rng.hpp"
#include "setgan/data.hpp"
#include "setgan/latent.hpp"
#include "setgan/nets.hpp"

namespace setgan {

enum class LossMode { Minimax, NonSaturating };

inline std::string to_string(LossMode m) {
    return m == LossMode::Minimax ? "minimax" : "nonsaturating";
}

inline LossMode loss_mode_from_string(const std::string& s) {
    if (s == "minimax") return LossMode::Minimax;
    if (s == "nonsaturating") return LossMode::NonSaturating;
    throw std::invalid_argument("unknown loss mode: " + s);
}

struct TrainConfig {
    std::size_t batch_sets = 32;
    std::size_t set_size = 3;  // must match the latent layout's n
    double lr_g = 2e-4;
    double lr_d = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    long total_steps = 10000;
    int d_steps_per_g_step = 1;
    LossMode loss_mode = LossMode::NonSaturating;
    std::uint64_t seed = 1234;
    long checkpoint_every = 1000;

    void validate() const {
        if (batch_sets < 1) throw std::invalid_argument("TrainConfig: batch_sets must be >= 1");
        if (total_steps < 1) throw std::invalid_argument("TrainConfig: total_steps must be >= 1");
        if (!(lr_g > 0.0) || !(lr_d > 0.0))
            throw std::invalid_argument("TrainConfig: learning rates must be positive");
        if (d_steps_per_g_step < 1)
            throw std::invalid_argument("TrainConfig: d_steps_per_g_step must be >= 1");
    }
};

struct StepMetrics {
    long step = 0;
    double d_loss = 0;
    double g_loss = 0;
    double d_real_mean = 0;
    double d_fake_mean = 0;
    double wall_time = 0;  // seconds since loop start; excluded from reproducibility checks
};

/// Probability clamp applied inside the loss logarithms.
inline constexpr double kProbEps = 1e-7;

/// Discriminator objective: -(mean log p_real + mean log(1 - p_fake)).
/// The discriminator ascends the value function by descending this.
inline double d_loss(const std::vector<double>& real_probs, const std::vector<double>& fake_probs) {
    if (real_probs.empty() || fake_probs.empty())
        throw std::invalid_argument("d_loss: empty probability vector");
    double lr = 0.0, lf = 0.0;
    for (double p : real_probs) lr += std::log(std::max(p, kProbEps));
    for (double p : fake_probs) lf += std::log(std::max(1.0 - p, kProbEps));
    return -(lr / static_cast<double>(real_probs.size()) + lf / static_cast<double>(fake_probs.size()));
}

/// Generator objective. Minimax: mean log(1 - p_fake), the literal value
/// function term. NonSaturating: -mean log p_fake, same descent direction with
/// stronger early gradients.
inline double g_loss(const std::vector<double>& fake_probs, LossMode mode) {
    if (fake_probs.empty()) throw std::invalid_argument("g_loss: empty probability vector");
    double acc = 0.0;
    if (mode == LossMode::Minimax) {
        for (double p : fake_probs) acc += std::log(std::max(1.0 - p, kProbEps));
        return acc / static_cast<double>(fake_probs.size());
    }
    for (double p : fake_probs) acc += std::log(std::max(p, kProbEps));
    return -acc / static_cast<double>(fake_probs.size());
}

namespace detail {

/// Loss gradients taken at the pre-sigmoid logits (numerically stable forms).
/// Entries falling in the epsilon clamp have zero gradient, matching the
/// clamped loss definitions exactly.
template <typename T>
Tensor<T> dlogit_real_for_d(const Tensor<T>& probs) {
    const double m = static_cast<double>(probs.size());
    Tensor<T> d(probs.shape());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = probs[i];
        d[i] = p <= kProbEps ? T(0) : static_cast<T>((p - 1.0) / m);
    }
    return d;
}

template <typename T>
Tensor<T> dlogit_fake_for_d(const Tensor<T>& probs) {
    const double m = static_cast<double>(probs.size());
    Tensor<T> d(probs.shape());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = probs[i];
        d[i] = (1.0 - p) <= kProbEps ? T(0) : static_cast<T>(p / m);
    }
    return d;
}

template <typename T>
Tensor<T> dlogit_for_g(const Tensor<T>& probs, LossMode mode) {
    const double m = static_cast<double>(probs.size());
    Tensor<T> d(probs.shape());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = probs[i];
        if (mode == LossMode::Minimax)
            d[i] = (1.0 - p) <= kProbEps ? T(0) : static_cast<T>(-p / m);
        else
            d[i] = p <= kProbEps ? T(0) : static_cast<T>((p - 1.0) / m);
    }
    return d;
}

template <typename T>
std::vector<double> to_double_vec(const Tensor<T>& t) {
    std::vector<double> v(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) v[i] = static_cast<double>(t[i]);
    return v;
}

}  // namespace detail

/// Draws n frames of one clip: without replacement when the clip is long
/// enough, with replacement otherwise. The returned order is uniformly random.
inline FrameSet sample_real_set(const LoadedClip& clip, std::size_t clip_index, std::size_t n,
                                Rng& rng) {
    const std::size_t len = clip.frames.size();
    if (len == 0) throw std::invalid_argument("sample_real_set: clip has no frames");
    if (n == 0) throw std::invalid_argument("sample_real_set: n must be >= 1");

    FrameSet set;
    set.clip_index = clip_index;
    set.frames.reserve(n);
    if (len >= n) {
        std::vector<std::size_t> idx(len);
        for (std::size_t i = 0; i < len; ++i) idx[i] = i;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = i + rng.uniform_index(len - i);
            std::swap(idx[i], idx[j]);
            set.frames.push_back(clip.frames[idx[i]]);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i)
            set.frames.push_back(clip.frames[rng.uniform_index(len)]);
    }
    return set;
}

namespace detail {

/// Packs B frame sets into a (B, n, S, S) tensor (channel block j = frame j).
template <typename T>
Tensor<T> pack_real_batch(const std::vector<FrameSet>& batch, std::size_t n, std::size_t side) {
    const std::size_t b = batch.size();
    Tensor<T> x({b, n, side, side});
    for (std::size_t i = 0; i < b; ++i) {
        if (batch[i].frames.size() != n)
            throw std::invalid_argument("train_step: frame set size does not match n");
        for (std::size_t j = 0; j < n; ++j) {
            const auto& f = batch[i].frames[j];
            if (f.dim(0) != side || f.dim(1) != side)
                throw std::invalid_argument("train_step: frame spatial size mismatch");
            for (std::size_t p = 0; p < side * side; ++p)
                x[((i * n + j) * side + 0) * side + p] = static_cast<T>(f[p]);
        }
    }
    return x;
}

/// Draws B structured latent sets and stacks their rows into a (B*n, d) code
/// matrix, preserving set order.
template <typename T>
Tensor<T> draw_fake_codes(const LatentLayout& layout, std::size_t b, Rng& rng) {
    const std::size_t n = layout.set_size, d = layout.total_dim();
    Tensor<T> codes({b * n, d});
    for (std::size_t i = 0; i < b; ++i) {
        const LatentSet set = sample_set(layout, rng);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c)
                codes[(i * n + r) * d + c] = static_cast<T>(set.codes.at2(r, c));
    }
    return codes;
}

template <typename T>
std::string diagnostic_dump(ParamStore<T>& store, double dl, double gl) {
    nlohmann::json j;
    j["step"] = store.step;
    j["d_loss"] = dl;
    j["g_loss"] = gl;
    nlohmann::json params = nlohmann::json::object();
    auto probe = [&](const std::string& name, nn::Param<T>& p) {
        params[name] = {{"l2", std::sqrt(p.value.squared_norm())},
                        {"finite", p.value.all_finite()}};
    };
    store.gen.visit_params(probe);
    store.disc.visit_params(probe);
    j["params"] = params;
    return j.dump();
}

}  // namespace detail

/// One adversarial update: d_steps_per_g_step discriminator updates on the
/// given real batch (fake sets regenerated fresh for each), then one generator
/// update on freshly drawn latent sets.
template <typename T>
StepMetrics train_step(ParamStore<T>& store, const std::vector<FrameSet>& batch,
                       const LatentLayout& layout, const TrainConfig& config, Rng& rng) {
    config.validate();
    if (batch.size() != config.batch_sets)
        throw std::invalid_argument("train_step: batch must contain batch_sets frame sets");
    if (config.set_size != layout.set_size)
        throw std::invalid_argument("train_step: config.set_size must match layout");

    const std::size_t b = batch.size();
    const std::size_t n = layout.set_size;
    const std::size_t side = store.gen_spec.image_side;
    const std::size_t out_ch = store.gen_spec.out_channels;

    const Tensor<T> x_real = detail::pack_real_batch<T>(batch, n, side);

    double d_loss_val = 0.0, d_real_mean = 0.0, d_fake_mean = 0.0;
    for (int it = 0; it < config.d_steps_per_g_step; ++it) {
        store.disc.zero_grad();

        Tensor<T> p_real = store.disc.forward(x_real, nn::Mode::Train);
        store.disc.backward_logits(detail::dlogit_real_for_d(p_real));

        Tensor<T> codes = detail::draw_fake_codes<T>(layout, b, rng);
        Tensor<T> fake_imgs = store.gen.forward(codes, nn::Mode::Train);
        fake_imgs.reshape_inplace({b, n * out_ch, side, side});
        Tensor<T> p_fake = store.disc.forward(fake_imgs, nn::Mode::Train);
        store.disc.backward_logits(detail::dlogit_fake_for_d(p_fake));

        store.opt_d.begin_step();
        store.disc.visit_params(
            [&](const std::string& name, nn::Param<T>& p) { store.opt_d.update(name, p); });

        d_loss_val = d_loss(detail::to_double_vec(p_real), detail::to_double_vec(p_fake));
        d_real_mean = p_real.sum() / static_cast<double>(p_real.size());
        d_fake_mean = p_fake.sum() / static_cast<double>(p_fake.size());
    }

    store.gen.zero_grad();
    Tensor<T> codes = detail::draw_fake_codes<T>(layout, b, rng);
    Tensor<T> fake_imgs = store.gen.forward(codes, nn::Mode::Train);
    Tensor<T> fake_sets = fake_imgs.reshaped({b, n * out_ch, side, side});
    Tensor<T> p_fake_g = store.disc.forward(fake_sets, nn::Mode::Train);
    const double g_loss_val = g_loss(detail::to_double_vec(p_fake_g), config.loss_mode);

    Tensor<T> dsets =
        store.disc.backward_logits(detail::dlogit_for_g(p_fake_g, config.loss_mode),
                                   /*accumulate_grads=*/false);
    dsets.reshape_inplace({b * n, out_ch, side, side});
    store.gen.backward(dsets);
    store.opt_g.begin_step();
    store.gen.visit_params(
        [&](const std::string& name, nn::Param<T>& p) { store.opt_g.update(name, p); });

    store.step += 1;

    if (!std::isfinite(d_loss_val) || !std::isfinite(g_loss_val))
        throw NumericError("train_step: non-finite loss at step " + std::to_string(store.step),
                           detail::diagnostic_dump(store, d_loss_val, g_loss_val));
    store.check_finite();

    StepMetrics m;
    m.step = store.step;
    m.d_loss = d_loss_val;
    m.g_loss = g_loss_val;
    m.d_real_mean = d_real_mean;
    m.d_fake_mean = d_fake_mean;
    return m;
}

/// Re-estimates the generator's batch-norm running statistics from a large
/// latent sample (sequential exact averaging over chunks). Training's small
/// per-batch statistics make the EMA a noisy population estimate; settling it
/// keeps eval-mode generation consistent with what the discriminator saw.
template <typename T>
void recalibrate_generator_stats(ParamStore<T>& store, const LatentLayout& layout, Rng& rng,
                                 std::size_t total_codes = 2048, std::size_t chunk = 256) {
    const std::size_t d = layout.total_dim();
    const std::size_t chunks = std::max<std::size_t>(1, total_codes / chunk);
    for (std::size_t k = 0; k < chunks; ++k) {
        store.gen.set_bn_momentum(1.0 / static_cast<double>(k + 1));
        Tensor<T> codes({chunk, d});
        for (std::size_t i = 0; i < codes.size(); ++i)
            codes[i] = static_cast<T>(rng.uniform(-1.0, 1.0));
        store.gen.forward(codes, nn::Mode::Train);
    }
    store.gen.set_bn_momentum(0.1);
}

using MetricsSink = std::function<void(const StepMetrics&)>;

/// Full training driver. Clips are visited in reshuffled epochs; each set is
/// drawn from a single clip. Checkpoints fire every checkpoint_every steps and
/// at the end. Deterministic given the seed.
template <typename T>
using CheckpointSink = std::function<void(ParamStore<T>&, const std::string& rng_state)>;

template <typename T>
ParamStore<T> train_loop(const Dataset& data, const LatentLayout& layout, const GeneratorSpec& gs,
                         const DiscriminatorSpec& ds, const TrainConfig& config,
                         const CheckpointSink<T>& checkpoint_sink, const MetricsSink& metrics_sink,
                         ParamStore<T>* resume = nullptr, const std::string& resume_rng_state = {}) {
    config.validate();
    if (data.clips.empty()) throw std::invalid_argument("train_loop: dataset is empty");

    Rng rng(config.seed);
    ParamStore<T> store;
    if (resume) {
        store = std::move(*resume);
        rng.restore(resume_rng_state);
    } else {
        store = ParamStore<T>::init(gs, ds, layout, config.lr_g, config.lr_d, config.beta1,
                                    config.beta2, rng);
    }

    std::vector<std::size_t> order(data.clips.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::size_t pos = order.size();  // forces a shuffle on first use

    const auto t0 = std::chrono::steady_clock::now();
    while (store.step < config.total_steps) {
        std::vector<FrameSet> batch;
        batch.reserve(config.batch_sets);
        for (std::size_t i = 0; i < config.batch_sets; ++i) {
            if (pos >= order.size()) {
                rng.shuffle(order);
                pos = 0;
            }
            const std::size_t ci = order[pos++];
            batch.push_back(sample_real_set(data.clips[ci], ci, layout.set_size, rng));
        }

        StepMetrics m = train_step(store, batch, layout, config, rng);
        m.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (metrics_sink) metrics_sink(m);

        if (checkpoint_sink && store.step % config.checkpoint_every == 0 &&
            store.step < config.total_steps)
            checkpoint_sink(store, rng.state());
    }

    // settle normalization statistics before the final checkpoint so
    // eval-mode reports match the trained distribution
    recalibrate_generator_stats(store, layout, rng);
    if (checkpoint_sink) checkpoint_sink(store, rng.state());
    return store;
}

}  // namespace setgan
