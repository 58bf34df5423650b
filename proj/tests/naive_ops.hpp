// Test-only reference implementations: plain nested loops, no GEMM, no code
// shared with the library's compute path. These are the independent oracles
// the forward/backward kernels are checked against.
#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>

#include "setgan/core/tensor.hpp"

namespace oracle {

using setgan::Tensor;

inline Tensor<double> dense(const Tensor<double>& x, const Tensor<double>& w,
                            const Tensor<double>& b) {
    const std::size_t B = x.dim(0), in = x.dim(1), out = w.dim(0);
    Tensor<double> y({B, out});
    for (std::size_t i = 0; i < B; ++i)
        for (std::size_t o = 0; o < out; ++o) {
            double acc = b[o];
            for (std::size_t j = 0; j < in; ++j) acc += x.at2(i, j) * w.at2(o, j);
            y.at2(i, o) = acc;
        }
    return y;
}

inline Tensor<double> conv2d(const Tensor<double>& x, const Tensor<double>& w,
                             const Tensor<double>& b, std::size_t stride, std::size_t pad) {
    const std::size_t B = x.dim(0), IC = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t OC = w.dim(0), K = w.dim(2);
    const std::size_t OH = (H + 2 * pad - K) / stride + 1;
    const std::size_t OW = (W + 2 * pad - K) / stride + 1;
    Tensor<double> y({B, OC, OH, OW});
    for (std::size_t bi = 0; bi < B; ++bi)
        for (std::size_t oc = 0; oc < OC; ++oc)
            for (std::size_t oy = 0; oy < OH; ++oy)
                for (std::size_t ox = 0; ox < OW; ++ox) {
                    double acc = b[oc];
                    for (std::size_t ic = 0; ic < IC; ++ic)
                        for (std::size_t ky = 0; ky < K; ++ky)
                            for (std::size_t kx = 0; kx < K; ++kx) {
                                const long iy =
                                    static_cast<long>(oy * stride + ky) - static_cast<long>(pad);
                                const long ix =
                                    static_cast<long>(ox * stride + kx) - static_cast<long>(pad);
                                if (iy < 0 || iy >= static_cast<long>(H) || ix < 0 ||
                                    ix >= static_cast<long>(W))
                                    continue;
                                acc += x.at4(bi, ic, static_cast<std::size_t>(iy),
                                             static_cast<std::size_t>(ix)) *
                                       w.at4(oc, ic, ky, kx);
                            }
                    y.at4(bi, oc, oy, ox) = acc;
                }
    return y;
}

inline Tensor<double> deconv2d(const Tensor<double>& x, const Tensor<double>& w,
                               const Tensor<double>& b, std::size_t stride, std::size_t pad) {
    const std::size_t B = x.dim(0), IC = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t OC = w.dim(1), K = w.dim(2);
    const std::size_t OH = (H - 1) * stride + K - 2 * pad;
    const std::size_t OW = (W - 1) * stride + K - 2 * pad;
    Tensor<double> y({B, OC, OH, OW});
    for (std::size_t bi = 0; bi < B; ++bi)
        for (std::size_t oc = 0; oc < OC; ++oc)
            for (std::size_t i = 0; i < OH * OW; ++i) y[(bi * OC + oc) * OH * OW + i] = b[oc];
    for (std::size_t bi = 0; bi < B; ++bi)
        for (std::size_t ic = 0; ic < IC; ++ic)
            for (std::size_t iy = 0; iy < H; ++iy)
                for (std::size_t ix = 0; ix < W; ++ix)
                    for (std::size_t oc = 0; oc < OC; ++oc)
                        for (std::size_t ky = 0; ky < K; ++ky)
                            for (std::size_t kx = 0; kx < K; ++kx) {
                                const long oy =
                                    static_cast<long>(iy * stride + ky) - static_cast<long>(pad);
                                const long ox =
                                    static_cast<long>(ix * stride + kx) - static_cast<long>(pad);
                                if (oy < 0 || oy >= static_cast<long>(OH) || ox < 0 ||
                                    ox >= static_cast<long>(OW))
                                    continue;
                                y.at4(bi, oc, static_cast<std::size_t>(oy),
                                      static_cast<std::size_t>(ox)) +=
                                    x.at4(bi, ic, iy, ix) * w.at4(ic, oc, ky, kx);
                            }
    return y;
}

/// Batch normalization with training-mode batch statistics (biased variance).
inline Tensor<double> batchnorm_train(const Tensor<double>& x, const Tensor<double>& gamma,
                                      const Tensor<double>& beta, double eps = 1e-5) {
    const std::size_t B = x.dim(0), C = x.dim(1), plane = x.dim(2) * x.dim(3);
    Tensor<double> y(x.shape());
    for (std::size_t c = 0; c < C; ++c) {
        double sum = 0, sq = 0;
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t i = 0; i < plane; ++i) {
                const double v = x[(b * C + c) * plane + i];
                sum += v;
                sq += v * v;
            }
        const double n = static_cast<double>(B * plane);
        const double mean = sum / n;
        const double var = sq / n - mean * mean;
        const double istd = 1.0 / std::sqrt(var + eps);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t i = 0; i < plane; ++i)
                y[(b * C + c) * plane + i] =
                    gamma[c] * (x[(b * C + c) * plane + i] - mean) * istd + beta[c];
    }
    return y;
}

inline Tensor<double> relu(Tensor<double> x) {
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < 0) x[i] = 0;
    return x;
}

inline Tensor<double> leaky_relu(Tensor<double> x, double alpha) {
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < 0) x[i] *= alpha;
    return x;
}

inline Tensor<double> tanh_map(Tensor<double> x) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::tanh(x[i]);
    return x;
}

inline Tensor<double> sigmoid(Tensor<double> x) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 1.0 / (1.0 + std::exp(-x[i]));
    return x;
}

}  // namespace oracle
