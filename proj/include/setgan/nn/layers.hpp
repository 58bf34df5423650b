#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "setgan/core/rng.hpp"
#include "setgan/core/tensor.hpp"

namespace setgan::nn {

enum class Mode { Train, Eval };

template <typename T>
using ColMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstRowMap = Eigen::Map<const RowMat<T>>;

/// A trainable tensor with its gradient accumulator.
template <typename T>
struct Param {
    Tensor<T> value;
    Tensor<T> grad;

    explicit Param(std::vector<std::size_t> shape = {})
        : value(shape.empty() ? Tensor<T>() : Tensor<T>(shape)),
          grad(shape.empty() ? Tensor<T>() : Tensor<T>(shape)) {}

    void zero_grad() { grad.set_zero(); }
};

namespace detail {

inline std::size_t conv_out(std::size_t in, std::size_t k, std::size_t s, std::size_t p) {
    return (in + 2 * p - k) / s + 1;
}

/// Gathers k x k patches of one (C,H,W) sample into a (C*k*k) x (OH*OW)
/// column matrix. Out-of-bounds taps read zero.
template <typename T>
void im2col(const T* x, std::size_t c, std::size_t h, std::size_t w, std::size_t k,
            std::size_t s, std::size_t p, ColMat<T>& cols) {
    const std::size_t oh = conv_out(h, k, s, p);
    const std::size_t ow = conv_out(w, k, s, p);
    cols.resize(static_cast<Eigen::Index>(c * k * k), static_cast<Eigen::Index>(oh * ow));
    for (std::size_t ci = 0; ci < c; ++ci) {
        const T* plane = x + ci * h * w;
        for (std::size_t kh = 0; kh < k; ++kh) {
            for (std::size_t kw = 0; kw < k; ++kw) {
                const std::size_t row = (ci * k + kh) * k + kw;
                for (std::size_t oy = 0; oy < oh; ++oy) {
                    const long iy = static_cast<long>(oy * s + kh) - static_cast<long>(p);
                    const bool y_ok = iy >= 0 && iy < static_cast<long>(h);
                    for (std::size_t ox = 0; ox < ow; ++ox) {
                        const long ix = static_cast<long>(ox * s + kw) - static_cast<long>(p);
                        T v = T(0);
                        if (y_ok && ix >= 0 && ix < static_cast<long>(w))
                            v = plane[static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)];
                        cols(static_cast<Eigen::Index>(row),
                             static_cast<Eigen::Index>(oy * ow + ox)) = v;
                    }
                }
            }
        }
    }
}

/// Adjoint of im2col: scatter-adds columns back onto the (C,H,W) sample.
template <typename T>
void col2im_add(const ColMat<T>& cols, T* x, std::size_t c, std::size_t h, std::size_t w,
                std::size_t k, std::size_t s, std::size_t p) {
    const std::size_t oh = conv_out(h, k, s, p);
    const std::size_t ow = conv_out(w, k, s, p);
    for (std::size_t ci = 0; ci < c; ++ci) {
        T* plane = x + ci * h * w;
        for (std::size_t kh = 0; kh < k; ++kh) {
            for (std::size_t kw = 0; kw < k; ++kw) {
                const std::size_t row = (ci * k + kh) * k + kw;
                for (std::size_t oy = 0; oy < oh; ++oy) {
                    const long iy = static_cast<long>(oy * s + kh) - static_cast<long>(p);
                    if (iy < 0 || iy >= static_cast<long>(h)) continue;
                    for (std::size_t ox = 0; ox < ow; ++ox) {
                        const long ix = static_cast<long>(ox * s + kw) - static_cast<long>(p);
                        if (ix < 0 || ix >= static_cast<long>(w)) continue;
                        plane[static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)] +=
                            cols(static_cast<Eigen::Index>(row),
                                 static_cast<Eigen::Index>(oy * ow + ox));
                    }
                }
            }
        }
    }
}

}  // namespace detail

/// Fully connected layer: y = x W^T + b. Input (B, in), output (B, out).
template <typename T>
class Dense {
public:
    Dense() = default;
    Dense(std::size_t in, std::size_t out)
        : in_(in), out_(out), weight_({out, in}), bias_({out}) {}

    void init(Rng& rng, double stddev = 0.02) {
        for (std::size_t i = 0; i < weight_.value.size(); ++i)
            weight_.value[i] = static_cast<T>(rng.normal(0.0, stddev));
        bias_.value.set_zero();
    }

    Tensor<T> forward(const Tensor<T>& x, Mode) {
        if (x.rank() != 2 || x.dim(1) != in_)
            throw std::invalid_argument("Dense: input shape mismatch");
        input_ = x;
        const std::size_t b = x.dim(0);
        Tensor<T> y({b, out_});
        ConstRowMap<T> xm(x.data(), b, in_);
        ConstRowMap<T> wm(weight_.value.data(), out_, in_);
        RowMap<T> ym(y.data(), b, out_);
        ym.noalias() = xm * wm.transpose();
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < out_; ++j) y.at2(i, j) += bias_.value[j];
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy, bool accumulate_grads = true) {
        const std::size_t b = dy.dim(0);
        ConstRowMap<T> dym(dy.data(), b, out_);
        ConstRowMap<T> xm(input_.data(), b, in_);
        ConstRowMap<T> wm(weight_.value.data(), out_, in_);
        if (accumulate_grads) {
            RowMap<T> dwm(weight_.grad.data(), out_, in_);
            dwm.noalias() += dym.transpose() * xm;
            for (std::size_t i = 0; i < b; ++i)
                for (std::size_t j = 0; j < out_; ++j) bias_.grad[j] += dy.at2(i, j);
        }
        Tensor<T> dx({b, in_});
        RowMap<T> dxm(dx.data(), b, in_);
        dxm.noalias() = dym * wm;
        return dx;
    }

    template <typename F>
    void visit(const std::string& prefix, F&& f) {
        f(prefix + ".weight", weight_);
        f(prefix + ".bias", bias_);
    }

    std::size_t param_count() const { return weight_.value.size() + bias_.value.size(); }

private:
    std::size_t in_ = 0, out_ = 0;
    Param<T> weight_, bias_;
    Tensor<T> input_;
};

/// Strided 2-D convolution with zero padding. Input (B, C_in, H, W), weight
/// (C_out, C_in, k, k).
template <typename T>
class Conv2d {
public:
    Conv2d() = default;
    Conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t k, std::size_t s, std::size_t p)
        : in_ch_(in_ch), out_ch_(out_ch), k_(k), s_(s), p_(p),
          weight_({out_ch, in_ch, k, k}), bias_({out_ch}) {}

    void init(Rng& rng, double stddev = 0.02) {
        for (std::size_t i = 0; i < weight_.value.size(); ++i)
            weight_.value[i] = static_cast<T>(rng.normal(0.0, stddev));
        bias_.value.set_zero();
    }

    Tensor<T> forward(const Tensor<T>& x, Mode) {
        if (x.rank() != 4 || x.dim(1) != in_ch_)
            throw std::invalid_argument("Conv2d: input shape mismatch");
        input_ = x;
        const std::size_t b = x.dim(0), h = x.dim(2), w = x.dim(3);
        const std::size_t oh = detail::conv_out(h, k_, s_, p_);
        const std::size_t ow = detail::conv_out(w, k_, s_, p_);
        Tensor<T> y({b, out_ch_, oh, ow});
        ConstRowMap<T> wm(weight_.value.data(), out_ch_, in_ch_ * k_ * k_);
        for (std::size_t bi = 0; bi < b; ++bi) {
            detail::im2col(x.data() + bi * in_ch_ * h * w, in_ch_, h, w, k_, s_, p_, cols_);
            RowMap<T> ym(y.data() + bi * out_ch_ * oh * ow, out_ch_, oh * ow);
            ym.noalias() = wm * cols_;
            for (std::size_t c = 0; c < out_ch_; ++c)
                ym.row(static_cast<Eigen::Index>(c)).array() += bias_.value[c];
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy, bool accumulate_grads = true) {
        const std::size_t b = input_.dim(0), h = input_.dim(2), w = input_.dim(3);
        const std::size_t oh = dy.dim(2), ow = dy.dim(3);
        Tensor<T> dx(input_.shape());
        ConstRowMap<T> wm(weight_.value.data(), out_ch_, in_ch_ * k_ * k_);
        for (std::size_t bi = 0; bi < b; ++bi) {
            ConstRowMap<T> dym(dy.data() + bi * out_ch_ * oh * ow, out_ch_, oh * ow);
            if (accumulate_grads) {
                detail::im2col(input_.data() + bi * in_ch_ * h * w, in_ch_, h, w, k_, s_, p_,
                               cols_);
                RowMap<T> dwm(weight_.grad.data(), out_ch_, in_ch_ * k_ * k_);
                dwm.noalias() += dym * cols_.transpose();
                for (std::size_t c = 0; c < out_ch_; ++c)
                    bias_.grad[c] += dym.row(static_cast<Eigen::Index>(c)).sum();
            }
            dcols_.noalias() = wm.transpose() * dym;
            detail::col2im_add(dcols_, dx.data() + bi * in_ch_ * h * w, in_ch_, h, w, k_, s_, p_);
        }
        return dx;
    }

    template <typename F>
    void visit(const std::string& prefix, F&& f) {
        f(prefix + ".weight", weight_);
        f(prefix + ".bias", bias_);
    }

    std::size_t param_count() const { return weight_.value.size() + bias_.value.size(); }

private:
    std::size_t in_ch_ = 0, out_ch_ = 0, k_ = 0, s_ = 0, p_ = 0;
    Param<T> weight_, bias_;
    Tensor<T> input_;
    ColMat<T> cols_, dcols_;
};

/// Fractionally strided (transposed) convolution; the adjoint of Conv2d with
/// the same geometry. Weight layout (C_in, C_out, k, k). Output spatial size
/// is (H-1)*s - 2p + k.
template <typename T>
class ConvTranspose2d {
public:
    ConvTranspose2d() = default;
    ConvTranspose2d(std::size_t in_ch, std::size_t out_ch, std::size_t k, std::size_t s,
                    std::size_t p)
        : in_ch_(in_ch), out_ch_(out_ch), k_(k), s_(s), p_(p),
          weight_({in_ch, out_ch, k, k}), bias_({out_ch}) {}

    void init(Rng& rng, double stddev = 0.02) {
        for (std::size_t i = 0; i < weight_.value.size(); ++i)
            weight_.value[i] = static_cast<T>(rng.normal(0.0, stddev));
        bias_.value.set_zero();
    }

    std::size_t out_size(std::size_t in) const { return (in - 1) * s_ + k_ - 2 * p_; }

    Tensor<T> forward(const Tensor<T>& x, Mode) {
        if (x.rank() != 4 || x.dim(1) != in_ch_)
            throw std::invalid_argument("ConvTranspose2d: input shape mismatch");
        input_ = x;
        const std::size_t b = x.dim(0), h = x.dim(2), w = x.dim(3);
        const std::size_t oh = out_size(h), ow = out_size(w);
        Tensor<T> y({b, out_ch_, oh, ow});
        ConstRowMap<T> wm(weight_.value.data(), in_ch_, out_ch_ * k_ * k_);
        for (std::size_t bi = 0; bi < b; ++bi) {
            ConstRowMap<T> xm(x.data() + bi * in_ch_ * h * w, in_ch_, h * w);
            dcols_.noalias() = wm.transpose() * xm;  // (out_ch*k*k) x (h*w)
            T* yb = y.data() + bi * out_ch_ * oh * ow;
            detail::col2im_add(dcols_, yb, out_ch_, oh, ow, k_, s_, p_);
            for (std::size_t c = 0; c < out_ch_; ++c) {
                T* plane = yb + c * oh * ow;
                for (std::size_t i = 0; i < oh * ow; ++i) plane[i] += bias_.value[c];
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy, bool accumulate_grads = true) {
        const std::size_t b = input_.dim(0), h = input_.dim(2), w = input_.dim(3);
        const std::size_t oh = dy.dim(2), ow = dy.dim(3);
        Tensor<T> dx(input_.shape());
        ConstRowMap<T> wm(weight_.value.data(), in_ch_, out_ch_ * k_ * k_);
        for (std::size_t bi = 0; bi < b; ++bi) {
            detail::im2col(dy.data() + bi * out_ch_ * oh * ow, out_ch_, oh, ow, k_, s_, p_, cols_);
            RowMap<T> dxm(dx.data() + bi * in_ch_ * h * w, in_ch_, h * w);
            dxm.noalias() = wm * cols_;
            if (accumulate_grads) {
                ConstRowMap<T> xm(input_.data() + bi * in_ch_ * h * w, in_ch_, h * w);
                RowMap<T> dwm(weight_.grad.data(), in_ch_, out_ch_ * k_ * k_);
                dwm.noalias() += xm * cols_.transpose();
                const T* dyb = dy.data() + bi * out_ch_ * oh * ow;
                for (std::size_t c = 0; c < out_ch_; ++c) {
                    T acc = T(0);
                    const T* plane = dyb + c * oh * ow;
                    for (std::size_t i = 0; i < oh * ow; ++i) acc += plane[i];
                    bias_.grad[c] += acc;
                }
            }
        }
        return dx;
    }

    template <typename F>
    void visit(const std::string& prefix, F&& f) {
        f(prefix + ".weight", weight_);
        f(prefix + ".bias", bias_);
    }

    std::size_t param_count() const { return weight_.value.size() + bias_.value.size(); }

private:
    std::size_t in_ch_ = 0, out_ch_ = 0, k_ = 0, s_ = 0, p_ = 0;
    Param<T> weight_, bias_;
    Tensor<T> input_;
    ColMat<T> cols_, dcols_;
};

/// Per-channel batch normalization over (B, H, W). Training mode uses batch
/// statistics (biased variance) and updates running averages; eval mode uses
/// the running averages.
template <typename T>
class BatchNorm2d {
public:
    BatchNorm2d() = default;
    explicit BatchNorm2d(std::size_t channels, double eps = 1e-5, double momentum = 0.1)
        : c_(channels), eps_(eps), momentum_(momentum), gamma_({channels}), beta_({channels}),
          running_mean_({channels}), running_var_({channels}) {
        running_var_.fill(T(1));
    }

    void init(Rng& rng, double stddev = 0.02) {
        for (std::size_t i = 0; i < c_; ++i) gamma_.value[i] = static_cast<T>(rng.normal(1.0, stddev));
        beta_.value.set_zero();
        running_mean_.set_zero();
        running_var_.fill(T(1));
    }

    Tensor<T> forward(const Tensor<T>& x, Mode mode) {
        if (x.rank() != 4 || x.dim(1) != c_)
            throw std::invalid_argument("BatchNorm2d: input shape mismatch");
        const std::size_t b = x.dim(0), h = x.dim(2), w = x.dim(3);
        const std::size_t plane = h * w;
        const double n = static_cast<double>(b * plane);

        Tensor<T> y(x.shape());
        if (mode == Mode::Train) {
            mean_.assign(c_, 0.0);
            inv_std_.assign(c_, 0.0);
            xhat_ = Tensor<T>(x.shape());
            for (std::size_t c = 0; c < c_; ++c) {
                double sum = 0.0, sq = 0.0;
                for (std::size_t bi = 0; bi < b; ++bi) {
                    const T* px = x.data() + (bi * c_ + c) * plane;
                    for (std::size_t i = 0; i < plane; ++i) {
                        sum += px[i];
                        sq += static_cast<double>(px[i]) * px[i];
                    }
                }
                const double mu = sum / n;
                const double var = std::max(0.0, sq / n - mu * mu);
                mean_[c] = mu;
                inv_std_[c] = 1.0 / std::sqrt(var + eps_);
                running_mean_[c] = static_cast<T>((1.0 - momentum_) * running_mean_[c] + momentum_ * mu);
                running_var_[c] = static_cast<T>((1.0 - momentum_) * running_var_[c] + momentum_ * var);
                const double g = gamma_.value[c], be = beta_.value[c];
                for (std::size_t bi = 0; bi < b; ++bi) {
                    const T* px = x.data() + (bi * c_ + c) * plane;
                    T* pxh = xhat_.data() + (bi * c_ + c) * plane;
                    T* py = y.data() + (bi * c_ + c) * plane;
                    for (std::size_t i = 0; i < plane; ++i) {
                        const double xh = (px[i] - mu) * inv_std_[c];
                        pxh[i] = static_cast<T>(xh);
                        py[i] = static_cast<T>(g * xh + be);
                    }
                }
            }
        } else {
            for (std::size_t c = 0; c < c_; ++c) {
                const double mu = running_mean_[c];
                const double istd = 1.0 / std::sqrt(static_cast<double>(running_var_[c]) + eps_);
                const double g = gamma_.value[c], be = beta_.value[c];
                for (std::size_t bi = 0; bi < b; ++bi) {
                    const T* px = x.data() + (bi * c_ + c) * plane;
                    T* py = y.data() + (bi * c_ + c) * plane;
                    for (std::size_t i = 0; i < plane; ++i)
                        py[i] = static_cast<T>(g * (px[i] - mu) * istd + be);
                }
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy, bool accumulate_grads = true) {
        const std::size_t b = dy.dim(0), h = dy.dim(2), w = dy.dim(3);
        const std::size_t plane = h * w;
        const double n = static_cast<double>(b * plane);
        Tensor<T> dx(dy.shape());
        for (std::size_t c = 0; c < c_; ++c) {
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (std::size_t bi = 0; bi < b; ++bi) {
                const T* pdy = dy.data() + (bi * c_ + c) * plane;
                const T* pxh = xhat_.data() + (bi * c_ + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    sum_dy += pdy[i];
                    sum_dy_xhat += static_cast<double>(pdy[i]) * pxh[i];
                }
            }
            if (accumulate_grads) {
                gamma_.grad[c] += static_cast<T>(sum_dy_xhat);
                beta_.grad[c] += static_cast<T>(sum_dy);
            }
            const double g = gamma_.value[c];
            const double istd = inv_std_[c];
            for (std::size_t bi = 0; bi < b; ++bi) {
                const T* pdy = dy.data() + (bi * c_ + c) * plane;
                const T* pxh = xhat_.data() + (bi * c_ + c) * plane;
                T* pdx = dx.data() + (bi * c_ + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    const double term = n * pdy[i] - sum_dy - pxh[i] * sum_dy_xhat;
                    pdx[i] = static_cast<T>(g * istd * term / n);
                }
            }
        }
        return dx;
    }

    template <typename F>
    void visit(const std::string& prefix, F&& f) {
        f(prefix + ".gamma", gamma_);
        f(prefix + ".beta", beta_);
    }

    template <typename F>
    void visit_buffers(const std::string& prefix, F&& f) {
        f(prefix + ".running_mean", running_mean_);
        f(prefix + ".running_var", running_var_);
    }

    void set_momentum(double m) { momentum_ = m; }
    double momentum() const { return momentum_; }

    std::size_t param_count() const { return 2 * c_; }

private:
    std::size_t c_ = 0;
    double eps_ = 1e-5, momentum_ = 0.1;
    Param<T> gamma_, beta_;
    Tensor<T> running_mean_, running_var_;
    std::vector<double> mean_, inv_std_;
    Tensor<T> xhat_;
};

template <typename T>
class ReLU {
public:
    Tensor<T> forward(const Tensor<T>& x, Mode) {
        input_ = x;
        Tensor<T> y = x;
        for (std::size_t i = 0; i < y.size(); ++i)
            if (y[i] < T(0)) y[i] = T(0);
        return y;
    }
    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx = dy;
        for (std::size_t i = 0; i < dx.size(); ++i)
            if (input_[i] <= T(0)) dx[i] = T(0);
        return dx;
    }

private:
    Tensor<T> input_;
};

template <typename T>
class LeakyReLU {
public:
    explicit LeakyReLU(double alpha = 0.2) : alpha_(static_cast<T>(alpha)) {}
    Tensor<T> forward(const Tensor<T>& x, Mode) {
        input_ = x;
        Tensor<T> y = x;
        for (std::size_t i = 0; i < y.size(); ++i)
            if (y[i] < T(0)) y[i] *= alpha_;
        return y;
    }
    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx = dy;
        for (std::size_t i = 0; i < dx.size(); ++i)
            if (input_[i] <= T(0)) dx[i] *= alpha_;
        return dx;
    }

private:
    T alpha_ = T(0.2);
    Tensor<T> input_;
};

template <typename T>
class Tanh {
public:
    Tensor<T> forward(const Tensor<T>& x, Mode) {
        output_ = x;
        for (std::size_t i = 0; i < output_.size(); ++i)
            output_[i] = std::tanh(output_[i]);
        return output_;
    }
    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx = dy;
        for (std::size_t i = 0; i < dx.size(); ++i)
            dx[i] *= T(1) - output_[i] * output_[i];
        return dx;
    }

private:
    Tensor<T> output_;
};

template <typename T>
class Sigmoid {
public:
    Tensor<T> forward(const Tensor<T>& x, Mode) {
        output_ = x;
        for (std::size_t i = 0; i < output_.size(); ++i)
            output_[i] = T(1) / (T(1) + std::exp(-output_[i]));
        return output_;
    }
    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx = dy;
        for (std::size_t i = 0; i < dx.size(); ++i)
            dx[i] *= output_[i] * (T(1) - output_[i]);
        return dx;
    }
    const Tensor<T>& output() const { return output_; }

private:
    Tensor<T> output_;
};

}  // namespace setgan::nn
