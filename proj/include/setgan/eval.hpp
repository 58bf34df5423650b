#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "setgan/core/image.hpp"
#include "setgan/core/rng.hpp"
#include "setgan/embedding.hpp"
#include "setgan/latent.hpp"
#include "setgan/nets.hpp"

namespace setgan {

/// Euclidean distance between embeddings; nullopt when either image fails to
/// embed (callers drop and count such samples).
inline std::optional<double> identity_distance(const EmbeddingAdapter& adapter,
                                               const GrayImage& a, const GrayImage& b) {
    const auto ea = adapter.embed(a);
    const auto eb = adapter.embed(b);
    if (!ea || !eb) return std::nullopt;
    if (ea->size() != eb->size())
        throw std::invalid_argument("identity_distance: embedding dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < ea->size(); ++i) {
        const double d = (*ea)[i] - (*eb)[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

struct SweepBin {
    double r = 0;                    // perturbation norm at the bin center
    std::size_t n_samples = 0;       // accepted distance samples
    std::size_t n_failed = 0;        // dropped samples (embedding failures)
    double q1 = 0, q2 = 0, q3 = 0;   // distance quartiles
    double fraction_below_tau = 0;
    bool valid = true;               // false when failures exceed 50%
};

struct SweepResult {
    Subspace subspace = Subspace::Motion;
    double tau = 0;
    double range_lo = 0, range_hi = 0;
    std::vector<SweepBin> bins;
};

namespace detail {

/// Eval-mode generation in bounded chunks.
template <typename T>
std::vector<GrayImage> generate_chunked(ParamStore<T>& store, const Tensor<double>& codes,
                                        std::size_t chunk = 128) {
    const std::size_t n = codes.dim(0), d = codes.dim(1);
    std::vector<GrayImage> out;
    out.reserve(n);
    for (std::size_t start = 0; start < n; start += chunk) {
        const std::size_t stop = std::min(n, start + chunk);
        Tensor<double> part({stop - start, d});
        std::copy(codes.data() + start * d, codes.data() + stop * d, part.data());
        auto imgs = generate(store, part);
        for (auto& img : imgs) out.push_back(std::move(img));
    }
    return out;
}

inline double sample_quantile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    return setgan::detail::sorted_quantile(values, q);
}

}  // namespace detail

/// The quantitative disentanglement protocol: perturb one subspace at a sweep
/// of norms spanning the [p, 1-p] random-pair distance range, regenerate, and
/// record the identity-distance distribution per norm bin.
template <typename T>
SweepResult perturbation_sweep(ParamStore<T>& store, const LatentLayout& layout,
                               Subspace subspace, const EmbeddingAdapter& adapter,
                               std::size_t n_bins, std::size_t samples_per_bin, double p, Rng& rng,
                               std::optional<std::pair<double, double>> range_override = {}) {
    if (n_bins < 3) throw std::invalid_argument("perturbation_sweep: n_bins must be >= 3");
    if (samples_per_bin < 30)
        throw std::invalid_argument("perturbation_sweep: needs >= 30 samples per bin");
    if (layout.total_dim() != store.gen_spec.latent_dim)
        throw std::invalid_argument("perturbation_sweep: layout does not match generator");

    const auto range = range_override
                           ? *range_override
                           : pair_distance_range(layout, subspace, p, 100000, rng);

    SweepResult result;
    result.subspace = subspace;
    result.tau = adapter.threshold();
    result.range_lo = range.first;
    result.range_hi = range.second;

    const std::size_t d = layout.total_dim();
    for (std::size_t bi = 0; bi < n_bins; ++bi) {
        const double r = range.first + (range.second - range.first) * static_cast<double>(bi) /
                                           static_cast<double>(n_bins - 1);
        Tensor<double> codes({2 * samples_per_bin, d});
        for (std::size_t s = 0; s < samples_per_bin; ++s) {
            std::vector<double> base(d);
            for (auto& v : base) v = rng.uniform(-1.0, 1.0);
            const PerturbResult pr = perturb(base, layout, {subspace, r}, rng);
            std::copy(base.begin(), base.end(), codes.data() + (2 * s) * d);
            std::copy(pr.code.begin(), pr.code.end(), codes.data() + (2 * s + 1) * d);
        }
        const auto images = detail::generate_chunked(store, codes);

        SweepBin bin;
        bin.r = r;
        std::vector<double> distances;
        distances.reserve(samples_per_bin);
        for (std::size_t s = 0; s < samples_per_bin; ++s) {
            const auto dist = identity_distance(adapter, images[2 * s], images[2 * s + 1]);
            if (!dist) {
                ++bin.n_failed;
                continue;
            }
            distances.push_back(*dist);
        }
        bin.n_samples = distances.size();
        bin.valid = bin.n_failed * 2 <= samples_per_bin;
        if (!distances.empty()) {
            bin.q1 = detail::sample_quantile(distances, 0.25);
            bin.q2 = detail::sample_quantile(distances, 0.50);
            bin.q3 = detail::sample_quantile(distances, 0.75);
            std::size_t below = 0;
            for (double v : distances)
                if (v < result.tau) ++below;
            bin.fraction_below_tau = static_cast<double>(below) / static_cast<double>(distances.size());
        } else {
            bin.valid = false;
        }
        result.bins.push_back(bin);
    }
    return result;
}

inline nlohmann::json to_json(const SweepResult& r) {
    nlohmann::json bins = nlohmann::json::array();
    for (const auto& b : r.bins)
        bins.push_back({{"r", b.r},
                        {"n_samples", b.n_samples},
                        {"n_failed", b.n_failed},
                        {"q1", b.q1},
                        {"q2", b.q2},
                        {"q3", b.q3},
                        {"fraction_below_tau", b.fraction_below_tau},
                        {"valid", b.valid}});
    return {{"subspace", r.subspace == Subspace::Motion ? "motion" : "content"},
            {"tau", r.tau},
            {"range_lo", r.range_lo},
            {"range_hi", r.range_hi},
            {"bins", bins}};
}

/// One text record per bin, newline delimited.
inline std::string sweep_records(const SweepResult& r) {
    std::string out;
    const std::string subspace = r.subspace == Subspace::Motion ? "motion" : "content";
    for (const auto& b : r.bins) {
        nlohmann::json j{{"subspace", subspace},
                         {"tau", r.tau},
                         {"r", b.r},
                         {"n_samples", b.n_samples},
                         {"n_failed", b.n_failed},
                         {"q1", b.q1},
                         {"q2", b.q2},
                         {"q3", b.q3},
                         {"fraction_below_tau", b.fraction_below_tau},
                         {"valid", b.valid}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

/// Quartile boxplot of a sweep on a white canvas; the horizontal line marks
/// the identity threshold tau.
inline GrayImage render_sweep_boxplot(const SweepResult& r, std::size_t height = 256,
                                      std::size_t width = 512) {
    GrayImage img = GrayImage::full({height, width}, 1.0f);
    const long margin = 24;
    const long plot_w = static_cast<long>(width) - 2 * margin;
    const long plot_h = static_cast<long>(height) - 2 * margin;

    double y_max = r.tau * 1.3;
    for (const auto& b : r.bins) y_max = std::max(y_max, b.q3 * 1.15);
    if (y_max <= 0) y_max = 1.0;

    const auto to_py = [&](double v) {
        return static_cast<long>(height) - margin -
               static_cast<long>(std::lround(v / y_max * plot_h));
    };

    draw::hline(img, static_cast<long>(height) - margin, margin, margin + plot_w, 0.0f);
    draw::vline(img, margin, margin, static_cast<long>(height) - margin, 0.0f);

    // threshold line
    for (long x = margin; x < margin + plot_w; x += 6)
        draw::hline(img, to_py(r.tau), x, std::min(x + 3, margin + plot_w), 0.45f);

    const long n = static_cast<long>(r.bins.size());
    if (n == 0) return img;
    const long slot = plot_w / n;
    const long box_w = std::max(4L, slot / 2);
    for (long i = 0; i < n; ++i) {
        const auto& b = r.bins[static_cast<std::size_t>(i)];
        const long cx = margin + i * slot + slot / 2;
        const float shade = b.valid ? 0.7f : 0.9f;
        draw::fill_rect(img, to_py(b.q3), cx - box_w / 2, to_py(b.q1), cx + box_w / 2, shade);
        draw::hline(img, to_py(b.q2), cx - box_w / 2, cx + box_w / 2, 0.0f);
        draw::hline(img, to_py(b.q3), cx - box_w / 2, cx + box_w / 2, 0.2f);
        draw::hline(img, to_py(b.q1), cx - box_w / 2, cx + box_w / 2, 0.2f);
        draw::vline(img, cx, static_cast<long>(height) - margin, static_cast<long>(height) - margin + 4, 0.0f);
    }
    return img;
}

enum class GridMode { PerRowMotion, SharedMotion };

struct GridSpec {
    std::size_t rows = 6;
    std::size_t cols = 7;
    GridMode mode = GridMode::PerRowMotion;
};

struct GridResult {
    GrayImage image;            // unit-range montage
    nlohmann::json provenance;  // every latent code used, row-major
};

/// Traversal montage: each row holds z_C fixed while z_M sweeps
/// [-z*_M, +z*_M]. PerRowMotion resamples z*_M per row; SharedMotion applies
/// one z*_M to every row.
template <typename T>
GridResult traversal_grid(ParamStore<T>& store, const LatentLayout& layout, const GridSpec& spec,
                          Rng& rng) {
    if (spec.rows < 2 || spec.cols < 2)
        throw std::invalid_argument("traversal_grid: rows and cols must be >= 2");
    if (layout.total_dim() != store.gen_spec.latent_dim)
        throw std::invalid_argument("traversal_grid: layout does not match generator");

    const std::size_t d = layout.total_dim();
    std::vector<double> shared_anchor(layout.d_motion);
    if (spec.mode == GridMode::SharedMotion)
        for (auto& v : shared_anchor) v = rng.uniform(-1.0, 1.0);

    Tensor<double> codes({spec.rows * spec.cols, d});
    for (std::size_t row = 0; row < spec.rows; ++row) {
        TraversalSpec t;
        t.steps = spec.cols;
        t.content.resize(layout.d_content);
        for (auto& v : t.content) v = rng.uniform(-1.0, 1.0);
        if (spec.mode == GridMode::SharedMotion) {
            t.motion_anchor = shared_anchor;
        } else {
            t.motion_anchor.resize(layout.d_motion);
            for (auto& v : t.motion_anchor) v = rng.uniform(-1.0, 1.0);
        }
        const auto row_codes = traverse_motion(t);
        for (std::size_t col = 0; col < spec.cols; ++col)
            std::copy(row_codes[col].begin(), row_codes[col].end(),
                      codes.data() + (row * spec.cols + col) * d);
    }

    const auto images = detail::generate_chunked(store, codes);
    std::vector<GrayImage> tiles;
    tiles.reserve(images.size());
    for (const auto& img : images) tiles.push_back(to_unit_range(img));

    GridResult result;
    result.image = montage(tiles, spec.rows, spec.cols);
    nlohmann::json flat = nlohmann::json::array();
    for (std::size_t i = 0; i < codes.size(); ++i) flat.push_back(codes[i]);
    result.provenance = {{"layout",
                          {{"d_content", layout.d_content},
                           {"d_motion", layout.d_motion},
                           {"set_size", layout.set_size}}},
                         {"rows", spec.rows},
                         {"cols", spec.cols},
                         {"mode", spec.mode == GridMode::SharedMotion ? "shared_motion"
                                                                      : "per_row_motion"},
                         {"codes", flat}};
    return result;
}

struct MotionConsistencyResult {
    double score = 0;          // in [0, 1]
    double baseline_mean = 0;  // permutation-shuffled score
    double baseline_std = 0;
    double z_score = 0;
    std::size_t identities = 0;
    std::size_t trajectory_len = 0;
};

/// Probe reading a motion attribute off a generated (signed-range) image.
using MotionProbe = std::function<std::optional<std::array<double, 2>>(const GrayImage&)>;

namespace detail {

/// Position trajectories are only meaningful above the probe's measurement
/// resolution (the centroid is good to about a pixel). Series whose variance
/// sits under this floor are treated as "no readable motion" and contribute
/// zero correlation; otherwise an untrained generator's microscopic but
/// deterministic jitter would correlate perfectly across identities.
inline constexpr double kMotionVarianceFloor = 0.09;  // (0.3 px)^2

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double num = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    const double nd = static_cast<double>(n);
    if (va / nd < kMotionVarianceFloor || vb / nd < kMotionVarianceFloor) return 0.0;
    return num / std::sqrt(va * vb);
}

/// Mean pairwise trajectory correlation mapped to [0, 1].
inline double trajectory_agreement(const std::vector<std::vector<std::array<double, 2>>>& tracks) {
    const std::size_t k = tracks.size();
    if (k < 2) return 1.0;
    double acc = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            std::vector<double> xi, yi, xj, yj;
            for (std::size_t t = 0; t < tracks[i].size(); ++t) {
                xi.push_back(tracks[i][t][0]);
                yi.push_back(tracks[i][t][1]);
                xj.push_back(tracks[j][t][0]);
                yj.push_back(tracks[j][t][1]);
            }
            acc += 0.5 * (pearson(xi, xj) + pearson(yi, yj));
            ++pairs;
        }
    }
    return 0.5 * (acc / static_cast<double>(pairs) + 1.0);
}

}  // namespace detail

/// Applies one fixed z_M trajectory across k distinct identities and measures
/// how consistently the probed motion attribute follows it: mean pairwise
/// correlation of the probed trajectories, normalized to [0, 1], against a
/// permutation-shuffled baseline.
template <typename T>
MotionConsistencyResult motion_consistency(ParamStore<T>& store, const LatentLayout& layout,
                                           const MotionProbe& probe, std::size_t k_identities,
                                           Rng& rng, std::size_t trajectory_len = 24,
                                           std::size_t n_shuffles = 200) {
    if (k_identities < 1)
        throw std::invalid_argument("motion_consistency: needs at least one identity");
    if (layout.total_dim() != store.gen_spec.latent_dim)
        throw std::invalid_argument("motion_consistency: layout does not match generator");

    MotionConsistencyResult result;
    result.identities = k_identities;
    result.trajectory_len = trajectory_len;
    if (k_identities == 1) {
        result.score = 1.0;
        return result;
    }

    // one smooth shared motion trajectory inside the box
    std::vector<std::vector<double>> motion(trajectory_len, std::vector<double>(layout.d_motion));
    {
        std::vector<double> m(layout.d_motion, 0.0);
        for (auto& v : m) v = rng.uniform(-1.0, 1.0);
        for (std::size_t t = 0; t < trajectory_len; ++t) {
            motion[t] = m;
            for (auto& v : m)
                v = std::clamp(0.8 * v + 0.45 * rng.uniform(-1.0, 1.0), -1.0, 1.0);
        }
    }

    const std::size_t d = layout.total_dim();
    Tensor<double> codes({k_identities * trajectory_len, d});
    for (std::size_t i = 0; i < k_identities; ++i) {
        std::vector<double> content(layout.d_content);
        for (auto& v : content) v = rng.uniform(-1.0, 1.0);
        for (std::size_t t = 0; t < trajectory_len; ++t) {
            double* row = codes.data() + (i * trajectory_len + t) * d;
            std::copy(content.begin(), content.end(), row);
            std::copy(motion[t].begin(), motion[t].end(), row + layout.d_content);
        }
    }
    const auto images = detail::generate_chunked(store, codes);

    const double center = static_cast<double>(store.gen_spec.image_side) / 2.0;
    std::vector<std::vector<std::array<double, 2>>> tracks(
        k_identities, std::vector<std::array<double, 2>>(trajectory_len, {center, center}));
    for (std::size_t i = 0; i < k_identities; ++i)
        for (std::size_t t = 0; t < trajectory_len; ++t) {
            const auto pos = probe(images[i * trajectory_len + t]);
            if (pos) tracks[i][t] = *pos;
        }

    result.score = detail::trajectory_agreement(tracks);

    // permutation baseline: shuffle each identity's trajectory independently
    std::vector<double> baseline(n_shuffles);
    std::vector<std::vector<std::array<double, 2>>> shuffled = tracks;
    for (std::size_t s = 0; s < n_shuffles; ++s) {
        for (std::size_t i = 0; i < k_identities; ++i) {
            shuffled[i] = tracks[i];
            rng.shuffle(shuffled[i]);
        }
        baseline[s] = detail::trajectory_agreement(shuffled);
    }
    double mean = 0.0;
    for (double v : baseline) mean += v;
    mean /= static_cast<double>(n_shuffles);
    double var = 0.0;
    for (double v : baseline) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n_shuffles);

    result.baseline_mean = mean;
    result.baseline_std = std::sqrt(var);
    result.z_score = result.baseline_std > 1e-12
                         ? (result.score - result.baseline_mean) / result.baseline_std
                         : 0.0;
    return result;
}

struct CollisionPair {
    std::size_t probe_a = 0, probe_b = 0;
    double latent_distance = 0;  // content-subspace distance
    double embed_distance = 0;
};

struct CollisionReport {
    std::vector<CollisionPair> collisions;  // distinct codes, same identity
    std::size_t n_probes = 0;
    std::size_t n_embedded = 0;
    std::size_t n_far_pairs = 0;  // pairs with latent distance above the median
    double rate = 0;              // collisions / far pairs
    double median_latent_distance = 0;
};

/// Searches for distinct content codes that generate the same identity:
/// embedding distance under tau while the content codes sit farther apart
/// than the median random-pair distance. An empty result is a valid outcome.
template <typename T>
CollisionReport identity_collision_search(ParamStore<T>& store, const LatentLayout& layout,
                                          const EmbeddingAdapter& adapter, std::size_t n_probes,
                                          Rng& rng) {
    if (n_probes < 1) throw std::invalid_argument("identity_collision_search: n_probes must be >= 1");
    if (layout.total_dim() != store.gen_spec.latent_dim)
        throw std::invalid_argument("identity_collision_search: layout does not match generator");

    CollisionReport report;
    report.n_probes = n_probes;
    report.median_latent_distance =
        pair_distance_range(layout, Subspace::Content, 0.5, 100000, rng).first;

    const std::size_t d = layout.total_dim();
    Tensor<double> codes({n_probes, d});
    codes.set_zero();
    for (std::size_t i = 0; i < n_probes; ++i)
        for (std::size_t j = 0; j < layout.d_content; ++j)
            codes[i * d + j] = rng.uniform(-1.0, 1.0);

    const auto images = detail::generate_chunked(store, codes);
    std::vector<std::size_t> ok;
    std::vector<std::vector<double>> embeddings(n_probes);
    for (std::size_t i = 0; i < n_probes; ++i) {
        auto e = adapter.embed(images[i]);
        if (e) {
            embeddings[i] = std::move(*e);
            ok.push_back(i);
        }
    }
    report.n_embedded = ok.size();

    const double tau = adapter.threshold();
    for (std::size_t a = 0; a < ok.size(); ++a) {
        for (std::size_t b = a + 1; b < ok.size(); ++b) {
            const std::size_t i = ok[a], j = ok[b];
            double zdist2 = 0.0;
            for (std::size_t c = 0; c < layout.d_content; ++c) {
                const double delta = codes[i * d + c] - codes[j * d + c];
                zdist2 += delta * delta;
            }
            const double zdist = std::sqrt(zdist2);
            if (zdist <= report.median_latent_distance) continue;
            ++report.n_far_pairs;
            double edist2 = 0.0;
            for (std::size_t c = 0; c < embeddings[i].size(); ++c) {
                const double delta = embeddings[i][c] - embeddings[j][c];
                edist2 += delta * delta;
            }
            const double edist = std::sqrt(edist2);
            if (edist < tau) report.collisions.push_back({i, j, zdist, edist});
        }
    }
    report.rate = report.n_far_pairs > 0
                      ? static_cast<double>(report.collisions.size()) /
                            static_cast<double>(report.n_far_pairs)
                      : 0.0;
    return report;
}

/// Plain random-sample montage with its provenance (the Figs. 3-4 analog).
template <typename T>
GridResult sample_montage(ParamStore<T>& store, const LatentLayout& layout, std::size_t rows,
                          std::size_t cols, Rng& rng) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("sample_montage: empty grid");
    const std::size_t d = layout.total_dim();
    Tensor<double> codes({rows * cols, d});
    for (std::size_t i = 0; i < codes.size(); ++i) codes[i] = rng.uniform(-1.0, 1.0);
    const auto images = detail::generate_chunked(store, codes);
    std::vector<GrayImage> tiles;
    tiles.reserve(images.size());
    for (const auto& img : images) tiles.push_back(to_unit_range(img));

    GridResult result;
    result.image = montage(tiles, rows, cols);
    nlohmann::json flat = nlohmann::json::array();
    for (std::size_t i = 0; i < codes.size(); ++i) flat.push_back(codes[i]);
    result.provenance = {{"layout",
                          {{"d_content", layout.d_content},
                           {"d_motion", layout.d_motion},
                           {"set_size", layout.set_size}}},
                         {"rows", rows},
                         {"cols", cols},
                         {"mode", "sample"},
                         {"codes", flat}};
    return result;
}

}  // namespace setgan
