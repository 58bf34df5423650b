#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "setgan/core/errors.hpp"
#include "setgan/core/image.hpp"
#include "setgan/core/rng.hpp"
#include "setgan/data.hpp"
#include "setgan/embedding.hpp"

namespace setgan {

enum class SpriteShape { Circle, Square, Triangle };

inline std::string to_string(SpriteShape s) {
    switch (s) {
        case SpriteShape::Circle: return "circle";
        case SpriteShape::Square: return "square";
        default: return "triangle";
    }
}

inline SpriteShape sprite_shape_from_string(const std::string& s) {
    if (s == "circle") return SpriteShape::Circle;
    if (s == "square") return SpriteShape::Square;
    if (s == "triangle") return SpriteShape::Triangle;
    throw std::invalid_argument("unknown sprite shape: " + s);
}

/// Frame-invariant factors of a clip: what the content subspace should learn.
struct ContentFactors {
    SpriteShape shape = SpriteShape::Circle;
    double intensity = 1.0;  // fill level in [0.3, 1.0]
};

/// Per-frame factors: what the motion subspace should learn.
struct MotionState {
    double x = 0, y = 0;  // sprite center, pixels
    double angle = 0;     // rotation, radians
};

struct SpriteFactors {
    ContentFactors content;
    std::vector<MotionState> motion;
};

inline constexpr double kIntensityLo = 0.3;
inline constexpr double kIntensityHi = 1.0;
inline constexpr std::size_t kIntensityLevels = 4;
inline constexpr double kSpriteFraction = 0.65;  // sprite size relative to the canvas

/// Canonical intensity grid used for identity tuples and oracle binning.
inline double intensity_level(std::size_t i) {
    return kIntensityLo + (kIntensityHi - kIntensityLo) * static_cast<double>(i) /
                              static_cast<double>(kIntensityLevels - 1);
}

inline double snap_intensity(double v) {
    double best = intensity_level(0);
    for (std::size_t i = 1; i < kIntensityLevels; ++i) {
        const double level = intensity_level(i);
        if (std::abs(v - level) < std::abs(v - best)) best = level;
    }
    return best;
}

/// The content tuple assigned to identity k. For small identity counts the
/// tuples land on the canonical intensity grid (well separated classes); for
/// large counts intensities are packed evenly within each shape.
inline ContentFactors content_for_identity(std::size_t k, std::size_t n_identities) {
    const SpriteShape shape = static_cast<SpriteShape>(k % 3);
    ContentFactors c;
    c.shape = shape;
    if (n_identities <= 3 * kIntensityLevels) {
        c.intensity = intensity_level(k / 3);
    } else {
        const std::size_t per_shape = (n_identities + 2) / 3;
        const std::size_t j = k / 3;
        c.intensity = kIntensityLo + (kIntensityHi - kIntensityLo) * static_cast<double>(j) /
                                         static_cast<double>(per_shape - 1);
    }
    return c;
}

namespace detail {

inline bool inside_sprite(SpriteShape shape, double dx, double dy, double size, double angle) {
    const double r = 0.5 * size;
    switch (shape) {
        case SpriteShape::Circle:
            return dx * dx + dy * dy <= r * r;
        case SpriteShape::Square: {
            const double a = 0.82 * r;
            const double c = std::cos(-angle), s = std::sin(-angle);
            const double u = c * dx - s * dy;
            const double v = s * dx + c * dy;
            return std::abs(u) <= a && std::abs(v) <= a;
        }
        case SpriteShape::Triangle: {
            const double rt = 1.16 * r;
            std::array<double, 3> vx, vy;
            for (int k = 0; k < 3; ++k) {
                const double phi = angle + M_PI / 2.0 + 2.0 * M_PI * k / 3.0;
                vx[static_cast<std::size_t>(k)] = rt * std::cos(phi);
                vy[static_cast<std::size_t>(k)] = rt * std::sin(phi);
            }
            for (int k = 0; k < 3; ++k) {
                const int k2 = (k + 1) % 3;
                const double ex = vx[static_cast<std::size_t>(k2)] - vx[static_cast<std::size_t>(k)];
                const double ey = vy[static_cast<std::size_t>(k2)] - vy[static_cast<std::size_t>(k)];
                const double px = dx - vx[static_cast<std::size_t>(k)];
                const double py = dy - vy[static_cast<std::size_t>(k)];
                if (ex * py - ey * px < 0.0) return false;
            }
            return true;
        }
    }
    return false;
}

}  // namespace detail

/// Rasterizes one sprite frame (3x3 supersampling) on a black canvas.
/// Unit-range output.
inline GrayImage render_sprite(std::size_t image_side, const ContentFactors& content,
                               const MotionState& motion) {
    const double size = kSpriteFraction * static_cast<double>(image_side);
    GrayImage img({image_side, image_side});
    constexpr int kSub = 3;
    for (std::size_t y = 0; y < image_side; ++y) {
        for (std::size_t x = 0; x < image_side; ++x) {
            int hits = 0;
            for (int sy = 0; sy < kSub; ++sy) {
                for (int sx = 0; sx < kSub; ++sx) {
                    const double px = static_cast<double>(x) + (sx + 0.5) / kSub;
                    const double py = static_cast<double>(y) + (sy + 0.5) / kSub;
                    if (detail::inside_sprite(content.shape, px - motion.x, py - motion.y, size,
                                              motion.angle))
                        ++hits;
                }
            }
            img.at2(y, x) =
                static_cast<float>(content.intensity * hits / double(kSub * kSub));
        }
    }
    return img;
}

/// Margin that keeps any rotation of any shape fully on the canvas.
inline double sprite_margin(std::size_t image_side) {
    return 0.62 * kSpriteFraction * static_cast<double>(image_side) + 1.0;
}

/// Low-frequency random walk: positions wander inside the safe region with
/// reflecting bounds, rotation drifts freely. Consecutive frames correlate,
/// every clip has nonzero motion variance.
inline std::vector<MotionState> sample_trajectory(std::size_t image_side, std::size_t frames,
                                                  Rng& rng) {
    const double lo = sprite_margin(image_side);
    const double hi = static_cast<double>(image_side) - lo;
    const double accel = 0.035 * (hi - lo) + 0.08;
    const double drag = 0.72;

    std::vector<MotionState> traj(frames);
    double x = rng.uniform(lo, hi), y = rng.uniform(lo, hi);
    double angle = rng.uniform(0.0, 2.0 * M_PI);
    double vx = rng.normal(0.0, accel), vy = rng.normal(0.0, accel);
    double va = rng.normal(0.0, 0.06);
    for (std::size_t t = 0; t < frames; ++t) {
        traj[t] = {x, y, angle};
        vx = drag * vx + rng.normal(0.0, accel);
        vy = drag * vy + rng.normal(0.0, accel);
        va = drag * va + rng.normal(0.0, 0.06);
        x += vx;
        y += vy;
        angle += va;
        if (x < lo) { x = 2 * lo - x; vx = -vx; }
        if (x > hi) { x = 2 * hi - x; vx = -vx; }
        if (y < lo) { y = 2 * lo - y; vy = -vy; }
        if (y > hi) { y = 2 * hi - y; vy = -vy; }
    }
    return traj;
}

inline nlohmann::json to_json(const SpriteFactors& f) {
    nlohmann::json motion = nlohmann::json::array();
    for (const auto& m : f.motion)
        motion.push_back({{"x", m.x}, {"y", m.y}, {"angle", m.angle}});
    return {{"content", {{"shape", to_string(f.content.shape)}, {"intensity", f.content.intensity}}},
            {"motion", motion}};
}

inline SpriteFactors sprite_factors_from_json(const nlohmann::json& j) {
    SpriteFactors f;
    f.content.shape = sprite_shape_from_string(j.at("content").at("shape").get<std::string>());
    f.content.intensity = j.at("content").at("intensity").get<double>();
    for (const auto& m : j.at("motion")) {
        f.motion.push_back(
            {m.at("x").get<double>(), m.at("y").get<double>(), m.at("angle").get<double>()});
    }
    return f;
}

/// Renders a synthetic corpus in the packed dataset layout, one sprite per
/// clip with fixed content and a smooth random trajectory. Ground-truth
/// factors are written as <clip>/factors.json sidecars. Byte-reproducible
/// from the seed.
inline std::vector<ClipManifest> gen_corpus(const std::filesystem::path& out_root,
                                            std::size_t n_identities,
                                            std::size_t clips_per_identity,
                                            std::size_t frames_per_clip, std::size_t image_side,
                                            Rng& rng) {
    if (n_identities < 1 || clips_per_identity < 1 || frames_per_clip < 1 || image_side < 8)
        throw std::invalid_argument("gen_corpus: all counts must be >= 1 and side >= 8");

    std::filesystem::create_directories(out_root);
    std::vector<ClipManifest> manifests;
    char buf[64];

    for (std::size_t id = 0; id < n_identities; ++id) {
        const ContentFactors content = content_for_identity(id, n_identities);
        for (std::size_t c = 0; c < clips_per_identity; ++c) {
            std::snprintf(buf, sizeof(buf), "id%04zu_clip%04zu", id, c);
            const std::string clip_id = buf;
            const auto clip_dir = out_root / clip_id;
            std::filesystem::create_directories(clip_dir);

            SpriteFactors factors;
            factors.content = content;
            factors.motion = sample_trajectory(image_side, frames_per_clip, rng);

            ClipManifest m;
            m.clip_id = clip_id;
            m.source = "synth";
            m.image_side = image_side;
            std::snprintf(buf, sizeof(buf), "id%04zu", id);
            m.identity = std::string(buf);
            for (std::size_t t = 0; t < frames_per_clip; ++t) {
                const GrayImage frame = render_sprite(image_side, content, factors.motion[t]);
                std::snprintf(buf, sizeof(buf), "%06zu.png", t);
                save_png_gray(clip_dir / buf, frame);
                m.frames.push_back(clip_id + "/" + buf);
            }
            std::ofstream fs(clip_dir / "factors.json", std::ios::trunc);
            if (!fs) throw DataError("gen_corpus: cannot write factors for " + clip_id);
            fs << to_json(factors).dump(2) << '\n';
            manifests.push_back(std::move(m));
        }
    }
    write_manifest(out_root, manifests);
    return manifests;
}

/// Oracle reading of the frame-invariant factors.
struct ContentEstimate {
    bool known = false;
    SpriteShape shape = SpriteShape::Circle;
    double intensity = 0.0;   // raw estimate before binning
    double confidence = 0.0;  // best template correlation, in [0, 1]
};

namespace detail {

struct TemplateBank {
    std::size_t window = 0;
    // per entry: shape and its rendered template
    std::vector<std::pair<SpriteShape, GrayImage>> entries;
};

inline const TemplateBank& template_bank(std::size_t image_side) {
    static std::map<std::size_t, TemplateBank> banks;
    auto it = banks.find(image_side);
    if (it != banks.end()) return it->second;

    TemplateBank bank;
    const double size = kSpriteFraction * static_cast<double>(image_side);
    bank.window = static_cast<std::size_t>(std::ceil(1.3 * size)) | 1U;  // odd window
    const double center = static_cast<double>(bank.window) / 2.0;

    auto add = [&](SpriteShape shape, double angle) {
        ContentFactors c{shape, 1.0};
        MotionState m{center, center, angle};
        // render on the window-sized canvas with the same rasterizer
        GrayImage full({bank.window, bank.window});
        constexpr int kSub = 3;
        for (std::size_t y = 0; y < bank.window; ++y)
            for (std::size_t x = 0; x < bank.window; ++x) {
                int hits = 0;
                for (int sy = 0; sy < kSub; ++sy)
                    for (int sx = 0; sx < kSub; ++sx) {
                        const double px = static_cast<double>(x) + (sx + 0.5) / kSub;
                        const double py = static_cast<double>(y) + (sy + 0.5) / kSub;
                        if (inside_sprite(shape, px - m.x, py - m.y, size, angle)) ++hits;
                    }
                full.at2(y, x) = static_cast<float>(c.intensity * hits / double(kSub * kSub));
            }
        bank.entries.emplace_back(shape, std::move(full));
    };

    add(SpriteShape::Circle, 0.0);
    for (int a = 0; a < 16; ++a) add(SpriteShape::Square, a * (M_PI / 2.0) / 16.0);
    for (int a = 0; a < 24; ++a) add(SpriteShape::Triangle, a * (2.0 * M_PI / 3.0) / 24.0);

    auto [ins, _] = banks.emplace(image_side, std::move(bank));
    return ins->second;
}

inline double normalized_correlation(const std::vector<double>& a, const std::vector<double>& b) {
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
        const double da = a[i] - ma, db = b[i] - mb;
        num += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va < 1e-12 || vb < 1e-12) return 0.0;
    return num / std::sqrt(va * vb);
}

}  // namespace detail

/// Estimates the sprite center as the intensity-weighted centroid of the
/// bright mask. nullopt for blank images. Unit-range input.
inline std::optional<std::array<double, 2>> sprite_position(const GrayImage& unit) {
    float peak = 0.0f;
    for (std::size_t i = 0; i < unit.size(); ++i) peak = std::max(peak, unit[i]);
    if (peak < 0.05f) return std::nullopt;

    const float thresh = 0.5f * peak;
    double sx = 0, sy = 0, sw = 0;
    for (std::size_t y = 0; y < unit.dim(0); ++y)
        for (std::size_t x = 0; x < unit.dim(1); ++x) {
            const float v = unit.at2(y, x);
            if (v >= thresh) {
                sx += v * (static_cast<double>(x) + 0.5);
                sy += v * (static_cast<double>(y) + 0.5);
                sw += v;
            }
        }
    if (sw <= 0.0) return std::nullopt;
    return std::array<double, 2>{sx / sw, sy / sw};
}

/// Reads the content factors from a rendered (or generated) frame: nearest
/// shape by template correlation around the detected centroid, intensity from
/// the eroded interior. Unit-range input. Returns known=false below the
/// confidence floor of 0.2.
inline ContentEstimate attribute_oracle(const GrayImage& unit) {
    ContentEstimate est;
    const auto pos = sprite_position(unit);
    if (!pos) return est;

    const auto& bank = detail::template_bank(unit.dim(0));
    const long w = static_cast<long>(bank.window);
    const long cy = static_cast<long>(std::lround((*pos)[1] - 0.5)) - w / 2;
    const long cx = static_cast<long>(std::lround((*pos)[0] - 0.5)) - w / 2;

    std::vector<double> window(static_cast<std::size_t>(w) * static_cast<std::size_t>(w), 0.0);
    const long h_img = static_cast<long>(unit.dim(0)), w_img = static_cast<long>(unit.dim(1));
    for (long y = 0; y < w; ++y)
        for (long x = 0; x < w; ++x) {
            const long iy = cy + y, ix = cx + x;
            if (iy >= 0 && iy < h_img && ix >= 0 && ix < w_img)
                window[static_cast<std::size_t>(y * w + x)] =
                    unit.at2(static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
        }

    double best = -2.0;
    SpriteShape best_shape = SpriteShape::Circle;
    std::vector<double> tmpl(window.size());
    for (const auto& [shape, timg] : bank.entries) {
        for (std::size_t i = 0; i < tmpl.size(); ++i) tmpl[i] = timg[i];
        const double rho = detail::normalized_correlation(window, tmpl);
        if (rho > best) {
            best = rho;
            best_shape = shape;
        }
    }

    // interior intensity: bright pixels whose 4-neighborhood is also bright
    float peak = 0.0f;
    for (std::size_t i = 0; i < unit.size(); ++i) peak = std::max(peak, unit[i]);
    const float thresh = 0.5f * peak;
    double sum = 0.0;
    std::size_t count = 0;
    const std::size_t hh = unit.dim(0), ww = unit.dim(1);
    for (std::size_t y = 1; y + 1 < hh; ++y)
        for (std::size_t x = 1; x + 1 < ww; ++x) {
            if (unit.at2(y, x) >= thresh && unit.at2(y - 1, x) >= thresh &&
                unit.at2(y + 1, x) >= thresh && unit.at2(y, x - 1) >= thresh &&
                unit.at2(y, x + 1) >= thresh) {
                sum += unit.at2(y, x);
                ++count;
            }
        }
    double intensity = 0.0;
    if (count > 0) {
        intensity = sum / static_cast<double>(count);
    } else {
        intensity = peak;
    }

    est.shape = best_shape;
    est.intensity = intensity;
    est.confidence = std::clamp(best, 0.0, 1.0);
    est.known = est.confidence >= 0.2;
    return est;
}

inline constexpr double kEmbeddingIntensityScale = 3.0;
inline constexpr double kSyntheticTau = 0.5;

/// Embedding adapter backed by the attribute oracle: one-hot shape plus the
/// binned intensity scaled so that distinct content classes sit farther apart
/// than the decision threshold tau = 0.5 (same identity <=> same class).
class SyntheticEmbeddingAdapter : public EmbeddingAdapter {
public:
    std::optional<std::vector<double>> embed(const GrayImage& image_signed) const override {
        const ContentEstimate est = attribute_oracle(to_unit_range(image_signed));
        if (!est.known) return std::nullopt;
        std::vector<double> e(4, 0.0);
        e[static_cast<std::size_t>(est.shape)] = 1.0;
        e[3] = kEmbeddingIntensityScale * snap_intensity(est.intensity);
        return e;
    }

    double threshold() const override { return kSyntheticTau; }
};

/// Motion probe for the synthetic domain: sprite center from a signed image.
inline std::optional<std::array<double, 2>> synthetic_motion_probe(const GrayImage& image_signed) {
    return sprite_position(to_unit_range(image_signed));
}

}  // namespace setgan
