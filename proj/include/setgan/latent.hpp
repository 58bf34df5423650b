#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "setgan/core/rng.hpp"
#include "setgan/core/tensor.hpp"

namespace setgan {

enum class Subspace { Content, Motion };

/// Partition of the latent space: the first d_C coordinates are shared across
/// a frame set (content), the remaining d_M are resampled per frame (motion).
struct LatentLayout {
    std::size_t d_content = 60;
    std::size_t d_motion = 40;
    std::size_t set_size = 3;

    LatentLayout() = default;
    LatentLayout(std::size_t d_c, std::size_t d_m, std::size_t n)
        : d_content(d_c), d_motion(d_m), set_size(n) {
        if (d_content < 1) throw std::invalid_argument("LatentLayout: d_content must be >= 1");
        if (set_size < 1) throw std::invalid_argument("LatentLayout: set_size must be >= 1");
    }

    std::size_t total_dim() const { return d_content + d_motion; }

    std::size_t subspace_dim(Subspace s) const {
        return s == Subspace::Content ? d_content : d_motion;
    }

    std::size_t subspace_offset(Subspace s) const {
        return s == Subspace::Content ? 0 : d_content;
    }
};

/// One structured latent set: an n x (d_C + d_M) code matrix whose content
/// columns are bit-identical across rows.
struct LatentSet {
    LatentLayout layout;
    Tensor<double> codes;  // shape {n, d_C + d_M}

    const double* row(std::size_t i) const { return codes.data() + i * layout.total_dim(); }
};

struct TraversalSpec {
    std::vector<double> content;        // z_C, length d_C
    std::vector<double> motion_anchor;  // z*_M, length d_M
    std::size_t steps = 7;
};

struct PerturbationSpec {
    Subspace subspace = Subspace::Motion;
    double norm = 0.0;
};

struct PerturbResult {
    std::vector<double> code;
    double achieved_norm = 0.0;
    bool exact = true;  // false if the requested norm was infeasible and the result was clamped
};

/// Draws one latent set from the structured distribution: z_C once, i.i.d.
/// uniform on [-1,1]^d_C, then an independent z_M per row, i.i.d. uniform on
/// [-1,1]^d_M. Draw order is fixed (content first, then rows) so training is
/// reproducible from the stream state alone.
inline LatentSet sample_set(const LatentLayout& layout, Rng& rng) {
    const std::size_t d = layout.total_dim();
    LatentSet set{layout, Tensor<double>({layout.set_size, d})};

    std::vector<double> content(layout.d_content);
    for (auto& v : content) v = rng.uniform(-1.0, 1.0);

    for (std::size_t i = 0; i < layout.set_size; ++i) {
        double* r = set.codes.data() + i * d;
        std::copy(content.begin(), content.end(), r);
        for (std::size_t j = 0; j < layout.d_motion; ++j)
            r[layout.d_content + j] = rng.uniform(-1.0, 1.0);
    }
    return set;
}

/// Linear sweep of the motion subspace through [-z*_M, +z*_M] with the content
/// part held fixed: code_j = (z_C, (2j/(k-1) - 1) * z*_M).
inline std::vector<std::vector<double>> traverse_motion(const TraversalSpec& spec) {
    if (spec.steps < 2) throw std::invalid_argument("traverse_motion: steps must be >= 2");
    for (double v : spec.content)
        if (v < -1.0 || v > 1.0) throw std::invalid_argument("traverse_motion: content out of [-1,1]");
    for (double v : spec.motion_anchor)
        if (v < -1.0 || v > 1.0)
            throw std::invalid_argument("traverse_motion: motion anchor out of [-1,1]");

    std::vector<std::vector<double>> codes(spec.steps);
    const std::size_t k = spec.steps;
    for (std::size_t j = 0; j < k; ++j) {
        const double t = 2.0 * static_cast<double>(j) / static_cast<double>(k - 1) - 1.0;
        std::vector<double> code(spec.content);
        code.reserve(spec.content.size() + spec.motion_anchor.size());
        for (double m : spec.motion_anchor) code.push_back(t * m);
        codes[j] = std::move(code);
    }
    return codes;
}

namespace detail {

/// Uniform direction on the unit sphere of the given dimension.
inline std::vector<double> sphere_direction(std::size_t dim, Rng& rng) {
    std::vector<double> u(dim);
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (auto& v : u) {
            v = rng.normal();
            norm2 += v * v;
        }
    } while (norm2 < 1e-24);
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& v : u) v *= inv;
    return u;
}

}  // namespace detail

/// Displaces the chosen subspace by a uniformly random direction of the exact
/// requested norm, leaving the complementary subspace bit-identical. Rejection
/// resamples the direction (up to max_tries) until the result stays inside the
/// [-1,1] box; on exhaustion the last candidate is clamped and the achieved
/// norm reported.
inline PerturbResult perturb(const std::vector<double>& code, const LatentLayout& layout,
                             const PerturbationSpec& spec, Rng& rng, int max_tries = 100) {
    if (code.size() != layout.total_dim())
        throw std::invalid_argument("perturb: code length does not match layout");
    if (spec.norm < 0.0) throw std::invalid_argument("perturb: norm must be >= 0");

    if (spec.norm == 0.0) return PerturbResult{code, 0.0, true};

    const std::size_t dim = layout.subspace_dim(spec.subspace);
    const std::size_t off = layout.subspace_offset(spec.subspace);
    if (dim == 0) return PerturbResult{code, 0.0, false};

    std::vector<double> candidate = code;
    for (int attempt = 0; attempt < max_tries; ++attempt) {
        const auto u = detail::sphere_direction(dim, rng);
        bool inside = true;
        for (std::size_t j = 0; j < dim; ++j) {
            candidate[off + j] = code[off + j] + spec.norm * u[j];
            if (candidate[off + j] < -1.0 || candidate[off + j] > 1.0) inside = false;
        }
        if (inside) return PerturbResult{std::move(candidate), spec.norm, true};
    }

    // infeasible at this norm: clamp the last candidate into the box
    double achieved2 = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
        candidate[off + j] = std::clamp(candidate[off + j], -1.0, 1.0);
        const double delta = candidate[off + j] - code[off + j];
        achieved2 += delta * delta;
    }
    return PerturbResult{std::move(candidate), std::sqrt(achieved2), false};
}

namespace detail {

/// Quantile of a sorted sample with linear interpolation between order
/// statistics (the common "type 7" definition).
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("sorted_quantile: empty sample");
    if (q <= 0.0) return sorted.front();
    if (q >= 1.0) return sorted.back();
    const double h = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace detail

/// Empirical [p, 1-p] quantile interval of Euclidean distances between
/// independent uniform draws restricted to one subspace. This sets the X-axis
/// range of the perturbation sweeps.
inline std::pair<double, double> pair_distance_range(const LatentLayout& layout, Subspace subspace,
                                                     double p, std::size_t samples, Rng& rng) {
    if (!(p > 0.0 && p <= 0.5))
        throw std::invalid_argument("pair_distance_range: p must be in (0, 0.5]");
    if (samples < 100)
        throw std::invalid_argument("pair_distance_range: needs >= 100 samples for stable quantiles");
    const std::size_t dim = layout.subspace_dim(subspace);
    if (dim == 0) return {0.0, 0.0};

    std::vector<double> dist(samples);
    for (std::size_t s = 0; s < samples; ++s) {
        double acc = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double a = rng.uniform(-1.0, 1.0);
            const double b = rng.uniform(-1.0, 1.0);
            acc += (a - b) * (a - b);
        }
        dist[s] = std::sqrt(acc);
    }
    std::sort(dist.begin(), dist.end());
    return {detail::sorted_quantile(dist, p), detail::sorted_quantile(dist, 1.0 - p)};
}

}  // namespace setgan
