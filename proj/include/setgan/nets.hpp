#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "setgan/core/errors.hpp"
#include "setgan/core/rng.hpp"
#include "setgan/core/tensor.hpp"
#include "setgan/latent.hpp"
#include "setgan/nn/adam.hpp"
#include "setgan/nn/layers.hpp"

namespace setgan {

struct GeneratorSpec {
    std::size_t latent_dim = 100;
    std::size_t image_side = 64;  // 32 or 64
    std::size_t base_maps = 64;
    std::size_t out_channels = 1;

    std::size_t stages() const {
        std::size_t side = image_side, n = 0;
        while (side > 4) {
            side /= 2;
            ++n;
        }
        return n;
    }

    void validate() const {
        if (image_side != 32 && image_side != 64)
            throw std::invalid_argument("GeneratorSpec: image_side must be 32 or 64");
        if (latent_dim < 1 || base_maps < 1 || out_channels < 1)
            throw std::invalid_argument("GeneratorSpec: dimensions must be positive");
    }
};

struct DiscriminatorSpec {
    std::size_t in_channels = 3;  // c * n
    std::size_t image_side = 64;
    std::size_t base_maps = 64;

    std::size_t stages() const {
        std::size_t side = image_side, n = 0;
        while (side > 4) {
            side /= 2;
            ++n;
        }
        return n;
    }

    void validate() const {
        if (image_side != 32 && image_side != 64)
            throw std::invalid_argument("DiscriminatorSpec: image_side must be 32 or 64");
        if (in_channels < 1 || base_maps < 1)
            throw std::invalid_argument("DiscriminatorSpec: dimensions must be positive");
    }
};

/// DCGAN-style generator: linear projection to a 4x4 feature block, then
/// fractionally strided convolutions doubling the spatial size, batch norm and
/// ReLU on hidden layers, tanh output.
template <typename T>
class Generator {
public:
    Generator() = default;

    explicit Generator(const GeneratorSpec& spec) : spec_(spec) {
        spec.validate();
        const std::size_t stages = spec.stages();
        widest_ = spec.base_maps << (stages - 1);
        proj_ = nn::Dense<T>(spec.latent_dim, widest_ * 16);
        bn_.emplace_back(widest_);
        std::size_t ch = widest_;
        for (std::size_t i = 1; i < stages; ++i) {
            deconv_.emplace_back(ch, ch / 2, 4, 2, 1);
            bn_.emplace_back(ch / 2);
            ch /= 2;
        }
        out_ = nn::ConvTranspose2d<T>(ch, spec.out_channels, 4, 2, 1);
    }

    void init(Rng& rng) {
        proj_.init(rng);
        for (auto& d : deconv_) d.init(rng);
        out_.init(rng);
        for (auto& b : bn_) b.init(rng);
    }

    const GeneratorSpec& spec() const { return spec_; }

    /// codes: (B, latent_dim) -> images (B, out_channels, S, S) in [-1, 1].
    Tensor<T> forward(const Tensor<T>& codes, nn::Mode mode) {
        if (codes.rank() != 2 || codes.dim(1) != spec_.latent_dim)
            throw std::invalid_argument("Generator: code length does not match latent_dim");
        const std::size_t b = codes.dim(0);
        Tensor<T> h = proj_.forward(codes, mode);
        h.reshape_inplace({b, widest_, 4, 4});
        h = bn_[0].forward(h, mode);
        h = relu_head_.forward(h, mode);
        for (std::size_t i = 0; i < deconv_.size(); ++i) {
            h = deconv_[i].forward(h, mode);
            h = bn_[i + 1].forward(h, mode);
            if (relu_.size() <= i) relu_.resize(i + 1);
            h = relu_[i].forward(h, mode);
        }
        h = out_.forward(h, mode);
        return tanh_.forward(h, mode);
    }

    /// dimages -> dcodes; accumulates parameter gradients.
    Tensor<T> backward(const Tensor<T>& dimg, bool accumulate_grads = true) {
        Tensor<T> g = tanh_.backward(dimg);
        g = out_.backward(g, accumulate_grads);
        for (std::size_t i = deconv_.size(); i-- > 0;) {
            g = relu_[i].backward(g);
            g = bn_[i + 1].backward(g, accumulate_grads);
            g = deconv_[i].backward(g, accumulate_grads);
        }
        g = relu_head_.backward(g);
        g = bn_[0].backward(g, accumulate_grads);
        const std::size_t b = g.dim(0);
        g.reshape_inplace({b, widest_ * 16});
        return proj_.backward(g, accumulate_grads);
    }

    template <typename F>
    void visit_params(F&& f) {
        proj_.visit("g.proj", f);
        bn_[0].visit("g.bn0", f);
        for (std::size_t i = 0; i < deconv_.size(); ++i) {
            deconv_[i].visit("g.deconv" + std::to_string(i + 1), f);
            bn_[i + 1].visit("g.bn" + std::to_string(i + 1), f);
        }
        out_.visit("g.out", f);
    }

    template <typename F>
    void visit_buffers(F&& f) {
        for (std::size_t i = 0; i < bn_.size(); ++i)
            bn_[i].visit_buffers("g.bn" + std::to_string(i), f);
    }

    void set_bn_momentum(double m) {
        for (auto& b : bn_) b.set_momentum(m);
    }

    std::size_t param_count() {
        std::size_t n = 0;
        visit_params([&](const std::string&, nn::Param<T>& p) { n += p.value.size(); });
        return n;
    }

    void zero_grad() {
        visit_params([](const std::string&, nn::Param<T>& p) { p.zero_grad(); });
    }

private:
    GeneratorSpec spec_;
    std::size_t widest_ = 0;
    nn::Dense<T> proj_;
    std::vector<nn::ConvTranspose2d<T>> deconv_;
    nn::ConvTranspose2d<T> out_;
    std::vector<nn::BatchNorm2d<T>> bn_;
    nn::ReLU<T> relu_head_;
    std::vector<nn::ReLU<T>> relu_;
    nn::Tanh<T> tanh_;
};

/// Set discriminator: mirrored strided convolution stack with leaky ReLU,
/// batch norm on all but the first convolution, sigmoid scalar head. Consumes
/// n frames stacked along the channel axis.
template <typename T>
class Discriminator {
public:
    Discriminator() = default;

    explicit Discriminator(const DiscriminatorSpec& spec) : spec_(spec) {
        spec.validate();
        const std::size_t stages = spec.stages();
        std::size_t ch_in = spec.in_channels;
        std::size_t ch_out = spec.base_maps;
        for (std::size_t i = 0; i < stages; ++i) {
            conv_.emplace_back(ch_in, ch_out, 4, 2, 1);
            if (i > 0) bn_.emplace_back(ch_out);
            lrelu_.emplace_back(0.2);
            ch_in = ch_out;
            ch_out *= 2;
        }
        head_ = nn::Dense<T>(ch_in * 16, 1);
        top_channels_ = ch_in;
    }

    void init(Rng& rng) {
        for (auto& c : conv_) c.init(rng);
        for (auto& b : bn_) b.init(rng);
        head_.init(rng);
    }

    const DiscriminatorSpec& spec() const { return spec_; }

    /// x: (B, in_channels, S, S) -> probabilities (B,), strictly inside (0,1).
    Tensor<T> forward(const Tensor<T>& x, nn::Mode mode) {
        if (x.rank() != 4 || x.dim(1) != spec_.in_channels)
            throw std::invalid_argument("Discriminator: channel count mismatch");
        if (x.dim(2) != spec_.image_side || x.dim(3) != spec_.image_side)
            throw std::invalid_argument("Discriminator: spatial size mismatch");
        const std::size_t b = x.dim(0);
        Tensor<T> h = x;
        for (std::size_t i = 0; i < conv_.size(); ++i) {
            h = conv_[i].forward(h, mode);
            if (i > 0) h = bn_[i - 1].forward(h, mode);
            h = lrelu_[i].forward(h, mode);
        }
        h.reshape_inplace({b, top_channels_ * 16});
        h = head_.forward(h, mode);
        h.reshape_inplace({b});
        Tensor<T> logits = h;
        logits.reshape_inplace({b, 1});
        Tensor<T> probs = sigmoid_.forward(logits, mode);
        probs.reshape_inplace({b});
        // keep the contract strict even under float rounding
        for (std::size_t i = 0; i < b; ++i)
            probs[i] = std::clamp(probs[i], static_cast<T>(1e-7), static_cast<T>(1.0 - 1e-7));
        return probs;
    }

    /// Backward from gradients w.r.t. the pre-sigmoid logits (numerically
    /// stable entry point for the cross-entropy losses).
    Tensor<T> backward_logits(const Tensor<T>& dlogits, bool accumulate_grads = true) {
        const std::size_t b = dlogits.dim(0);
        Tensor<T> g = dlogits.reshaped({b, 1});
        g = head_.backward(g, accumulate_grads);
        g.reshape_inplace({b, top_channels_, 4, 4});
        for (std::size_t i = conv_.size(); i-- > 0;) {
            g = lrelu_[i].backward(g);
            if (i > 0) g = bn_[i - 1].backward(g, accumulate_grads);
            g = conv_[i].backward(g, accumulate_grads);
        }
        return g;
    }

    template <typename F>
    void visit_params(F&& f) {
        for (std::size_t i = 0; i < conv_.size(); ++i)
            conv_[i].visit("d.conv" + std::to_string(i + 1), f);
        for (std::size_t i = 0; i < bn_.size(); ++i)
            bn_[i].visit("d.bn" + std::to_string(i + 2), f);
        head_.visit("d.head", f);
    }

    template <typename F>
    void visit_buffers(F&& f) {
        for (std::size_t i = 0; i < bn_.size(); ++i)
            bn_[i].visit_buffers("d.bn" + std::to_string(i + 2), f);
    }

    std::size_t param_count() {
        std::size_t n = 0;
        visit_params([&](const std::string&, nn::Param<T>& p) { n += p.value.size(); });
        return n;
    }

    void zero_grad() {
        visit_params([](const std::string&, nn::Param<T>& p) { p.zero_grad(); });
    }

private:
    DiscriminatorSpec spec_;
    std::size_t top_channels_ = 0;
    std::vector<nn::Conv2d<T>> conv_;
    std::vector<nn::BatchNorm2d<T>> bn_;
    std::vector<nn::LeakyReLU<T>> lrelu_;
    nn::Dense<T> head_;
    nn::Sigmoid<T> sigmoid_;
};

/// Stacks n frames along the channel axis: channel block j holds frame j.
/// Frames may be (H, W) or (c, H, W); all must share one shape.
template <typename T>
Tensor<T> stack_set(const std::vector<Tensor<T>>& frames) {
    if (frames.empty()) throw std::invalid_argument("stack_set: empty frame set");
    const auto& first = frames.front();
    std::size_t c = 1, h = 0, w = 0;
    if (first.rank() == 2) {
        h = first.dim(0);
        w = first.dim(1);
    } else if (first.rank() == 3) {
        c = first.dim(0);
        h = first.dim(1);
        w = first.dim(2);
    } else {
        throw std::invalid_argument("stack_set: frames must be rank 2 or 3");
    }
    for (const auto& f : frames)
        if (!f.same_shape(first)) throw std::invalid_argument("stack_set: frame shape mismatch");

    Tensor<T> out({frames.size() * c, h, w});
    for (std::size_t j = 0; j < frames.size(); ++j)
        std::memcpy(out.data() + j * c * h * w, frames[j].data(), sizeof(T) * c * h * w);
    return out;
}

/// Inverse of stack_set for single-channel frames.
template <typename T>
std::vector<Tensor<T>> unstack_set(const Tensor<T>& stacked, std::size_t n) {
    if (stacked.rank() != 3 || stacked.dim(0) % n != 0)
        throw std::invalid_argument("unstack_set: channel count not divisible by n");
    const std::size_t c = stacked.dim(0) / n, h = stacked.dim(1), w = stacked.dim(2);
    std::vector<Tensor<T>> frames;
    frames.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        Tensor<T> f = c == 1 ? Tensor<T>({h, w}) : Tensor<T>({c, h, w});
        std::memcpy(f.data(), stacked.data() + j * c * h * w, sizeof(T) * c * h * w);
        frames.push_back(std::move(f));
    }
    return frames;
}

/// Generator and discriminator parameters, their optimizer state, and the
/// global step counter; the checkpointable unit of a training run.
template <typename T>
struct ParamStore {
    GeneratorSpec gen_spec;
    DiscriminatorSpec disc_spec;
    LatentLayout layout;
    Generator<T> gen;
    Discriminator<T> disc;
    nn::Adam<T> opt_g, opt_d;
    long step = 0;

    static ParamStore init(const GeneratorSpec& gs, const DiscriminatorSpec& ds,
                           const LatentLayout& layout, double lr_g, double lr_d, double beta1,
                           double beta2, Rng& rng) {
        if (ds.in_channels != gs.out_channels * layout.set_size)
            throw std::invalid_argument(
                "ParamStore: discriminator in_channels must equal out_channels * set size");
        ParamStore s;
        s.gen_spec = gs;
        s.disc_spec = ds;
        s.layout = layout;
        s.gen = Generator<T>(gs);
        s.disc = Discriminator<T>(ds);
        s.gen.init(rng);
        s.disc.init(rng);
        s.opt_g = nn::Adam<T>(lr_g, beta1, beta2);
        s.opt_d = nn::Adam<T>(lr_d, beta1, beta2);
        return s;
    }

    /// Throws NumericError if any parameter went non-finite.
    void check_finite() {
        bool ok = true;
        std::string offender;
        auto probe = [&](const std::string& name, nn::Param<T>& p) {
            if (ok && !p.value.all_finite()) {
                ok = false;
                offender = name;
            }
        };
        gen.visit_params(probe);
        disc.visit_params(probe);
        if (!ok) throw NumericError("non-finite parameter after update: " + offender);
    }
};

namespace detail {

template <typename T>
void write_tensor(std::ostream& os, const std::string& name, const Tensor<T>& t) {
    const std::uint32_t name_len = static_cast<std::uint32_t>(name.size());
    os.write(reinterpret_cast<const char*>(&name_len), sizeof(name_len));
    os.write(name.data(), name_len);
    const std::uint32_t rank = static_cast<std::uint32_t>(t.rank());
    os.write(reinterpret_cast<const char*>(&rank), sizeof(rank));
    for (std::size_t i = 0; i < t.rank(); ++i) {
        const std::uint64_t d = t.dim(i);
        os.write(reinterpret_cast<const char*>(&d), sizeof(d));
    }
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(sizeof(T) * t.size()));
}

template <typename T>
std::pair<std::string, Tensor<T>> read_tensor(std::istream& is) {
    std::uint32_t name_len = 0;
    is.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    std::uint32_t rank = 0;
    is.read(reinterpret_cast<char*>(&rank), sizeof(rank));
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) {
        std::uint64_t v = 0;
        is.read(reinterpret_cast<char*>(&v), sizeof(v));
        d = static_cast<std::size_t>(v);
    }
    Tensor<T> t(shape);
    is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(sizeof(T) * t.size()));
    if (!is) throw DataError("checkpoint: truncated tensor record '" + name + "'");
    return {std::move(name), std::move(t)};
}

}  // namespace detail

inline constexpr char kCheckpointMagic[8] = {'S', 'G', 'A', 'N', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Serializes the full training state. Reloading reproduces forward outputs
/// bit-exactly on the same machine.
template <typename T>
void save_checkpoint(const std::filesystem::path& path, ParamStore<T>& store,
                     const std::string& rng_state) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("save_checkpoint: cannot open " + path.string());

    os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    os.write(reinterpret_cast<const char*>(&kCheckpointVersion), sizeof(kCheckpointVersion));

    nlohmann::json header;
    header["gen_spec"] = {{"latent_dim", store.gen_spec.latent_dim},
                          {"image_side", store.gen_spec.image_side},
                          {"base_maps", store.gen_spec.base_maps},
                          {"out_channels", store.gen_spec.out_channels}};
    header["disc_spec"] = {{"in_channels", store.disc_spec.in_channels},
                           {"image_side", store.disc_spec.image_side},
                           {"base_maps", store.disc_spec.base_maps}};
    header["layout"] = {{"d_content", store.layout.d_content},
                        {"d_motion", store.layout.d_motion},
                        {"set_size", store.layout.set_size}};
    header["step"] = store.step;
    header["opt"] = {{"lr_g", store.opt_g.learning_rate()},
                     {"lr_d", store.opt_d.learning_rate()},
                     {"t_g", store.opt_g.step_count()},
                     {"t_d", store.opt_d.step_count()}};
    header["opt_beta1"] = 0.0;  // betas stored via config; kept for format stability
    header["rng"] = rng_state;
    header["scalar"] = sizeof(T) == 4 ? "f32" : "f64";
    const std::string htext = header.dump();
    const std::uint64_t hlen = htext.size();
    os.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    os.write(htext.data(), static_cast<std::streamsize>(htext.size()));

    std::vector<std::pair<std::string, const Tensor<T>*>> tensors;
    auto collect_param = [&](const std::string& name, nn::Param<T>& p) {
        tensors.emplace_back(name, &p.value);
    };
    auto collect_buffer = [&](const std::string& name, Tensor<T>& t) {
        tensors.emplace_back(name, &t);
    };
    store.gen.visit_params(collect_param);
    store.gen.visit_buffers(collect_buffer);
    store.disc.visit_params(collect_param);
    store.disc.visit_buffers(collect_buffer);
    // a fresh optimizer has no slots yet; materialize zero moments so the
    // file always carries the complete state
    store.gen.visit_params([&](const std::string& name, nn::Param<T>& p) {
        store.opt_g.ensure_slot(name, p.value.shape());
    });
    store.disc.visit_params([&](const std::string& name, nn::Param<T>& p) {
        store.opt_d.ensure_slot(name, p.value.shape());
    });
    store.opt_g.visit_state([&](const std::string& name, Tensor<T>& t) {
        tensors.emplace_back("adam_g." + name, &t);
    });
    store.opt_d.visit_state([&](const std::string& name, Tensor<T>& t) {
        tensors.emplace_back("adam_d." + name, &t);
    });

    const std::uint64_t count = tensors.size();
    os.write(reinterpret_cast<const char*>(&count), sizeof(count));
    for (const auto& [name, t] : tensors) detail::write_tensor(os, name, *t);
    if (!os) throw DataError("save_checkpoint: write failed for " + path.string());
}

struct CheckpointMeta {
    std::string rng_state;
    long step = 0;
};

/// Loads a checkpoint written by save_checkpoint. Optimizer hyperparameters
/// (learning rates, betas) are re-supplied by the caller's config; moment
/// tensors and step counts are restored from the file.
template <typename T>
CheckpointMeta load_checkpoint(const std::filesystem::path& path, ParamStore<T>& store,
                               double lr_g, double lr_d, double beta1, double beta2) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("load_checkpoint: cannot open " + path.string());

    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw DataError("load_checkpoint: bad magic in " + path.string());
    std::uint32_t version = 0;
    is.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != kCheckpointVersion)
        throw DataError("load_checkpoint: unsupported format version " + std::to_string(version));

    std::uint64_t hlen = 0;
    is.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string htext(hlen, '\0');
    is.read(htext.data(), static_cast<std::streamsize>(hlen));
    const nlohmann::json header = nlohmann::json::parse(htext);

    const std::string scalar = header.at("scalar").get<std::string>();
    if ((sizeof(T) == 4 && scalar != "f32") || (sizeof(T) == 8 && scalar != "f64"))
        throw DataError("load_checkpoint: scalar type mismatch (file has " + scalar + ")");

    GeneratorSpec gs;
    gs.latent_dim = header.at("gen_spec").at("latent_dim").get<std::size_t>();
    gs.image_side = header.at("gen_spec").at("image_side").get<std::size_t>();
    gs.base_maps = header.at("gen_spec").at("base_maps").get<std::size_t>();
    gs.out_channels = header.at("gen_spec").at("out_channels").get<std::size_t>();
    DiscriminatorSpec ds;
    ds.in_channels = header.at("disc_spec").at("in_channels").get<std::size_t>();
    ds.image_side = header.at("disc_spec").at("image_side").get<std::size_t>();
    ds.base_maps = header.at("disc_spec").at("base_maps").get<std::size_t>();
    LatentLayout layout(header.at("layout").at("d_content").get<std::size_t>(),
                        header.at("layout").at("d_motion").get<std::size_t>(),
                        header.at("layout").at("set_size").get<std::size_t>());

    store.gen_spec = gs;
    store.disc_spec = ds;
    store.layout = layout;
    store.gen = Generator<T>(gs);
    store.disc = Discriminator<T>(ds);
    store.opt_g = nn::Adam<T>(lr_g, beta1, beta2);
    store.opt_d = nn::Adam<T>(lr_d, beta1, beta2);
    store.step = header.at("step").get<long>();
    store.opt_g.set_step_count(header.at("opt").at("t_g").get<long>());
    store.opt_d.set_step_count(header.at("opt").at("t_d").get<long>());

    std::uint64_t count = 0;
    is.read(reinterpret_cast<char*>(&count), sizeof(count));
    std::map<std::string, Tensor<T>> blobs;
    for (std::uint64_t i = 0; i < count; ++i) {
        auto [name, t] = detail::read_tensor<T>(is);
        blobs.emplace(std::move(name), std::move(t));
    }

    auto take = [&](const std::string& name, Tensor<T>& dst) {
        auto it = blobs.find(name);
        if (it == blobs.end()) throw DataError("load_checkpoint: missing tensor " + name);
        if (!it->second.same_shape(dst))
            throw DataError("load_checkpoint: shape mismatch for " + name);
        dst = std::move(it->second);
    };
    auto take_param = [&](const std::string& name, nn::Param<T>& p) { take(name, p.value); };
    auto take_buffer = [&](const std::string& name, Tensor<T>& t) { take(name, t); };
    store.gen.visit_params(take_param);
    store.gen.visit_buffers(take_buffer);
    store.disc.visit_params(take_param);
    store.disc.visit_buffers(take_buffer);

    auto restore_opt = [&](nn::Adam<T>& opt, const std::string& prefix, auto& net) {
        net.visit_params([&](const std::string& name, nn::Param<T>& p) {
            opt.ensure_slot(name, p.value.shape());
        });
        opt.visit_state([&](const std::string& name, Tensor<T>& t) { take(prefix + name, t); });
    };
    restore_opt(store.opt_g, "adam_g.", store.gen);
    restore_opt(store.opt_d, "adam_d.", store.disc);

    CheckpointMeta meta;
    meta.rng_state = header.at("rng").get<std::string>();
    meta.step = store.step;
    return meta;
}

/// Forward-only generation helper: evaluates the generator in eval mode on a
/// batch of full latent codes (m x d, doubles) and returns single-channel
/// images in [-1, 1].
template <typename T>
std::vector<Tensor<float>> generate(ParamStore<T>& store, const Tensor<double>& codes) {
    if (codes.rank() != 2 || codes.dim(1) != store.gen_spec.latent_dim)
        throw std::invalid_argument("generate: code matrix width must equal latent_dim");
    Tensor<T> in({codes.dim(0), codes.dim(1)});
    for (std::size_t i = 0; i < codes.size(); ++i) in[i] = static_cast<T>(codes[i]);
    Tensor<T> imgs = store.gen.forward(in, nn::Mode::Eval);
    const std::size_t b = imgs.dim(0), s = imgs.dim(2);
    std::vector<Tensor<float>> out;
    out.reserve(b);
    for (std::size_t i = 0; i < b; ++i) {
        Tensor<float> img({s, s});
        for (std::size_t p = 0; p < s * s; ++p)
            img[p] = static_cast<float>(imgs[i * imgs.dim(1) * s * s + p]);
        out.push_back(std::move(img));
    }
    return out;
}

/// Forward-only discrimination helper: one stacked set tensor (c*n, S, S) to a
/// probability strictly inside (0, 1).
template <typename T>
double discriminate(ParamStore<T>& store, const Tensor<T>& set_tensor) {
    if (set_tensor.rank() != 3 || set_tensor.dim(0) != store.disc_spec.in_channels)
        throw std::invalid_argument("discriminate: channel count mismatch");
    Tensor<T> batch({1, set_tensor.dim(0), set_tensor.dim(1), set_tensor.dim(2)});
    std::memcpy(batch.data(), set_tensor.data(), sizeof(T) * set_tensor.size());
    Tensor<T> p = store.disc.forward(batch, nn::Mode::Eval);
    return static_cast<double>(p[0]);
}

}  // namespace setgan
