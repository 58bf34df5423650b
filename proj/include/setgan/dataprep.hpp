#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "setgan/core/errors.hpp"
#include "setgan/core/image.hpp"
#include "setgan/data.hpp"
#include "setgan/spline.hpp"

namespace setgan {

/// Face/subject box: center coordinates and size, pixels.
struct BoundingBox {
    double x = 0, y = 0;  // center
    double w = 0, h = 0;
};

/// Per-frame detection time series for one clip, before or after smoothing.
struct BBoxTrack {
    std::size_t frame_count = 0;
    std::vector<double> x, y, w, h;
    std::vector<std::uint8_t> detected;

    std::size_t detected_count() const {
        std::size_t n = 0;
        for (auto d : detected) n += d ? 1 : 0;
        return n;
    }
};

/// Single-frame detector interface. Implementations must return boxes inside
/// the image bounds, or nullopt on a miss. The repo ships the exact synthetic
/// detector; real face detectors plug in behind this interface (see
/// FileDetector for the offline-detections route).
class DetectorAdapter {
public:
    virtual ~DetectorAdapter() = default;
    virtual std::optional<BoundingBox> detect(const GrayImage& frame_unit) = 0;
};

/// Exact detector for the synthetic corpus: bounding box of the bright mask.
class SpriteDetector : public DetectorAdapter {
public:
    explicit SpriteDetector(float threshold = 0.15f) : threshold_(threshold) {}

    std::optional<BoundingBox> detect(const GrayImage& frame) override {
        long min_x = std::numeric_limits<long>::max(), min_y = min_x;
        long max_x = -1, max_y = -1;
        for (std::size_t y = 0; y < frame.dim(0); ++y)
            for (std::size_t x = 0; x < frame.dim(1); ++x)
                if (frame.at2(y, x) >= threshold_) {
                    min_x = std::min(min_x, static_cast<long>(x));
                    max_x = std::max(max_x, static_cast<long>(x));
                    min_y = std::min(min_y, static_cast<long>(y));
                    max_y = std::max(max_y, static_cast<long>(y));
                }
        if (max_x < 0) return std::nullopt;
        BoundingBox b;
        b.w = static_cast<double>(max_x - min_x + 1);
        b.h = static_cast<double>(max_y - min_y + 1);
        b.x = static_cast<double>(min_x) + b.w / 2.0;
        b.y = static_cast<double>(min_y) + b.h / 2.0;
        return b;
    }

private:
    float threshold_;
};

/// Replays detections produced offline by an external detector process. The
/// file holds one JSON record per line: {"frame": i, "x":, "y":, "w":, "h":}
/// with frames missing from the file treated as misses. detect() is called
/// once per frame in clip order.
class FileDetector : public DetectorAdapter {
public:
    explicit FileDetector(const std::filesystem::path& jsonl) {
        std::ifstream is(jsonl);
        if (!is) throw DataError("FileDetector: cannot open " + jsonl.string());
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            const auto j = nlohmann::json::parse(line);
            const std::size_t frame = j.at("frame").get<std::size_t>();
            BoundingBox b{j.at("x").get<double>(), j.at("y").get<double>(),
                          j.at("w").get<double>(), j.at("h").get<double>()};
            if (boxes_.size() <= frame) boxes_.resize(frame + 1);
            boxes_[frame] = b;
        }
    }

    std::optional<BoundingBox> detect(const GrayImage&) override {
        const std::size_t i = cursor_++;
        if (i >= boxes_.size()) return std::nullopt;
        return boxes_[i];
    }

    void reset() { cursor_ = 0; }

private:
    std::vector<std::optional<BoundingBox>> boxes_;
    std::size_t cursor_ = 0;
};

/// Runs the detector over every frame; misses are recorded, a clip with zero
/// detections is rejected.
inline BBoxTrack track_clip(const std::vector<GrayImage>& frames, DetectorAdapter& detector) {
    if (frames.empty()) throw std::invalid_argument("track_clip: clip has no frames");
    BBoxTrack t;
    t.frame_count = frames.size();
    t.x.assign(t.frame_count, 0.0);
    t.y.assign(t.frame_count, 0.0);
    t.w.assign(t.frame_count, 0.0);
    t.h.assign(t.frame_count, 0.0);
    t.detected.assign(t.frame_count, 0);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto box = detector.detect(frames[i]);
        if (box) {
            t.x[i] = box->x;
            t.y[i] = box->y;
            t.w[i] = box->w;
            t.h[i] = box->h;
            t.detected[i] = 1;
        }
    }
    if (t.detected_count() == 0) throw DataError("track_clip: clip rejected, zero detections");
    return t;
}

namespace detail {

/// Total variation over the subsequence where mask is set (all frames when
/// mask is empty).
inline double total_variation(const std::vector<double>& v,
                              const std::vector<std::uint8_t>* mask = nullptr) {
    double tv = 0.0;
    bool have_prev = false;
    double prev = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (mask && !(*mask)[i]) continue;
        if (have_prev) tv += std::abs(v[i] - prev);
        prev = v[i];
        have_prev = true;
    }
    return tv;
}

inline std::vector<double> smooth_series(const std::vector<double>& series,
                                         const std::vector<std::uint8_t>& detected,
                                         std::size_t n_detected, double smoothness) {
    const std::size_t frames = series.size();
    std::vector<double> xs, ys;
    xs.reserve(n_detected);
    ys.reserve(n_detected);
    for (std::size_t i = 0; i < frames; ++i)
        if (detected[i]) {
            xs.push_back(static_cast<double>(i));
            ys.push_back(series[i]);
        }

    // knot count from the smoothness knob (target spacing in frames), capped
    // by the detected sample count so the fit stays determined
    const double span = static_cast<double>(frames - 1);
    std::size_t k = static_cast<std::size_t>(std::floor(span / std::max(smoothness, 1.0))) + 2;
    k = std::clamp<std::size_t>(k, 2, n_detected);

    const NaturalCubicSpline spline =
        fit_natural_spline_ls(xs, ys, uniform_knots(0.0, span, k));
    std::vector<double> out(frames);
    for (std::size_t i = 0; i < frames; ++i) out[i] = spline(static_cast<double>(i));
    return out;
}

}  // namespace detail

/// Replaces all four series with spline fits evaluated at every frame index,
/// fitted to the detected points only. Gaps are recovered by the fit; the
/// output track is fully detected. smoothness is the target knot spacing in
/// frames; with fewer than 4 detections the fit degenerates to a line.
inline BBoxTrack smooth_track(const BBoxTrack& track, double smoothness = 8.0) {
    const std::size_t n_det = track.detected_count();
    if (n_det < 2) throw DataError("smooth_track: clip rejected, fewer than 2 detections");
    if (track.frame_count < 2) {
        BBoxTrack out = track;
        out.detected.assign(out.frame_count, 1);
        return out;
    }

    const double spacing = n_det < 4 ? static_cast<double>(track.frame_count) : smoothness;

    BBoxTrack out = track;
    out.x = detail::smooth_series(track.x, track.detected, n_det, spacing);
    out.y = detail::smooth_series(track.y, track.detected, n_det, spacing);
    out.w = detail::smooth_series(track.w, track.detected, n_det, spacing);
    out.h = detail::smooth_series(track.h, track.detected, n_det, spacing);
    for (std::size_t i = 0; i < out.frame_count; ++i) {
        out.w[i] = std::max(out.w[i], 1e-3);
        out.h[i] = std::max(out.h[i], 1e-3);
    }
    out.detected.assign(out.frame_count, 1);
    return out;
}

inline SmoothingReport smoothing_report(const BBoxTrack& pre, const BBoxTrack& post) {
    SmoothingReport r;
    r.pre_tv_x = detail::total_variation(pre.x, &pre.detected);
    r.pre_tv_y = detail::total_variation(pre.y, &pre.detected);
    r.pre_tv_w = detail::total_variation(pre.w, &pre.detected);
    r.pre_tv_h = detail::total_variation(pre.h, &pre.detected);
    r.post_tv_x = detail::total_variation(post.x);
    r.post_tv_y = detail::total_variation(post.y);
    r.post_tv_w = detail::total_variation(post.w);
    r.post_tv_h = detail::total_variation(post.h);
    return r;
}

namespace detail {

/// Area-average resample of a real-valued square source window to out_side.
inline GrayImage resample_window(const GrayImage& src, double y0, double x0, double side,
                                 std::size_t out_side) {
    GrayImage out({out_side, out_side});
    const double step = side / static_cast<double>(out_side);
    const long h = static_cast<long>(src.dim(0)), w = static_cast<long>(src.dim(1));
    for (std::size_t oy = 0; oy < out_side; ++oy) {
        const double ry0 = y0 + oy * step, ry1 = ry0 + step;
        for (std::size_t ox = 0; ox < out_side; ++ox) {
            const double rx0 = x0 + ox * step, rx1 = rx0 + step;
            double acc = 0.0, area = 0.0;
            const long iy0 = static_cast<long>(std::floor(ry0));
            const long iy1 = static_cast<long>(std::ceil(ry1));
            for (long iy = std::max(0L, iy0); iy < std::min(h, iy1); ++iy) {
                const double wy = std::min(ry1, static_cast<double>(iy + 1)) -
                                  std::max(ry0, static_cast<double>(iy));
                if (wy <= 0) continue;
                const long ix0 = static_cast<long>(std::floor(rx0));
                const long ix1 = static_cast<long>(std::ceil(rx1));
                for (long ix = std::max(0L, ix0); ix < std::min(w, ix1); ++ix) {
                    const double wx = std::min(rx1, static_cast<double>(ix + 1)) -
                                      std::max(rx0, static_cast<double>(ix));
                    if (wx <= 0) continue;
                    acc += wy * wx *
                           src.at2(static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
                    area += wy * wx;
                }
            }
            out.at2(oy, ox) = area > 0 ? static_cast<float>(acc / area) : 0.0f;
        }
    }
    return out;
}

}  // namespace detail

/// Square crops around the smoothed track, clipped into image bounds, resized
/// to image_side, scaled to [-1, 1]. Frames whose crop side falls under 8 px
/// are dropped; a clip losing more than 20% of its frames is rejected.
inline std::vector<GrayImage> crop_frames(const std::vector<GrayImage>& frames,
                                          const BBoxTrack& track, double margin,
                                          std::size_t image_side) {
    if (frames.size() != track.frame_count)
        throw std::invalid_argument("crop_frames: frame/track length mismatch");
    if (track.detected_count() != track.frame_count)
        throw std::invalid_argument("crop_frames: track must be fully detected (smoothed)");

    std::vector<GrayImage> out;
    out.reserve(frames.size());
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const double h_img = static_cast<double>(frames[i].dim(0));
        const double w_img = static_cast<double>(frames[i].dim(1));
        double side = std::max(track.w[i], track.h[i]) * (1.0 + margin);
        if (side < 8.0) {
            ++dropped;
            continue;
        }
        side = std::min({side, w_img, h_img});
        const double x0 = std::clamp(track.x[i] - side / 2.0, 0.0, w_img - side);
        const double y0 = std::clamp(track.y[i] - side / 2.0, 0.0, h_img - side);
        GrayImage crop = detail::resample_window(frames[i], y0, x0, side, image_side);
        out.push_back(to_signed_range(crop));
    }
    if (dropped * 5 > frames.size())
        throw DataError("crop_frames: clip rejected, more than 20% degenerate boxes");
    return out;
}

/// A clip ready for packing: processed frames plus provenance.
struct PreparedClip {
    std::string clip_id;
    std::string source;
    std::vector<GrayImage> frames;  // signed range
    std::size_t image_side = 0;
    std::optional<std::string> identity;
    std::optional<SmoothingReport> smoothing;
};

/// Writes per-clip frame files plus the dataset manifest. On failure the
/// partially written clip directories from this call are removed.
inline std::vector<ClipManifest> pack_dataset(const std::vector<PreparedClip>& clips,
                                              const std::filesystem::path& out_root) {
    if (clips.empty()) throw DataError("pack_dataset: no accepted clips");
    std::filesystem::create_directories(out_root);
    std::vector<std::filesystem::path> created;
    std::vector<ClipManifest> manifests;
    char buf[32];
    try {
        for (const auto& clip : clips) {
            const auto dir = out_root / clip.clip_id;
            std::filesystem::create_directories(dir);
            created.push_back(dir);
            ClipManifest m;
            m.clip_id = clip.clip_id;
            m.source = clip.source;
            m.image_side = clip.image_side;
            m.identity = clip.identity;
            m.smoothing = clip.smoothing;
            for (std::size_t t = 0; t < clip.frames.size(); ++t) {
                std::snprintf(buf, sizeof(buf), "%06zu.png", t);
                save_png_gray(dir / buf, to_unit_range(clip.frames[t]));
                m.frames.push_back(clip.clip_id + "/" + buf);
            }
            manifests.push_back(std::move(m));
        }
        write_manifest(out_root, manifests);
    } catch (...) {
        for (const auto& dir : created) {
            std::error_code ec;
            std::filesystem::remove_all(dir, ec);
        }
        throw;
    }
    return manifests;
}

/// Raw input clip: an ordered list of frame image files.
struct RawClip {
    std::string clip_id;
    std::vector<std::filesystem::path> frame_paths;
    std::optional<std::string> identity;
};

/// Discovers raw clips under a directory: uses manifest.jsonl when present
/// (e.g. a rendered synthetic corpus), otherwise one clip per subdirectory
/// with frames in filename order.
inline std::vector<RawClip> discover_raw_clips(const std::filesystem::path& input_root) {
    std::vector<RawClip> clips;
    if (std::filesystem::exists(input_root / "manifest.jsonl")) {
        for (const auto& m : read_manifest(input_root)) {
            RawClip c;
            c.clip_id = m.clip_id;
            c.identity = m.identity;
            for (const auto& rel : m.frames) c.frame_paths.push_back(input_root / rel);
            clips.push_back(std::move(c));
        }
        return clips;
    }
    std::vector<std::filesystem::path> dirs;
    for (const auto& e : std::filesystem::directory_iterator(input_root))
        if (e.is_directory()) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& dir : dirs) {
        RawClip c;
        c.clip_id = dir.filename().string();
        for (const auto& e : std::filesystem::directory_iterator(dir))
            if (e.is_regular_file() && e.path().extension() == ".png")
                c.frame_paths.push_back(e.path());
        std::sort(c.frame_paths.begin(), c.frame_paths.end());
        if (!c.frame_paths.empty()) clips.push_back(std::move(c));
    }
    return clips;
}

struct PrepOptions {
    double margin = 0.15;      // crop margin; negative values crop aggressively
    double smoothness = 8.0;   // spline knot spacing, frames
    std::size_t image_side = 64;
};

struct PrepReport {
    std::size_t accepted = 0;
    std::vector<std::pair<std::string, std::string>> rejects;  // clip_id -> reason
};

/// Full preprocessing pipeline: detect, smooth, crop, pack. Rejected clips are
/// reported, not fatal; an entirely empty output is an error surfaced by the
/// caller via the report.
inline PrepReport prep_dataset(const std::filesystem::path& input_root,
                               const std::filesystem::path& output_root,
                               DetectorAdapter& detector, const PrepOptions& options) {
    const auto raw = discover_raw_clips(input_root);
    if (raw.empty()) throw DataError("prep_dataset: no input clips under " + input_root.string());

    PrepReport report;
    std::vector<PreparedClip> prepared;
    for (const auto& rc : raw) {
        try {
            std::vector<GrayImage> frames;
            frames.reserve(rc.frame_paths.size());
            for (const auto& p : rc.frame_paths) frames.push_back(load_png_gray(p));
            if (auto* fd = dynamic_cast<FileDetector*>(&detector)) fd->reset();

            const BBoxTrack raw_track = track_clip(frames, detector);
            const BBoxTrack smoothed = smooth_track(raw_track, options.smoothness);
            PreparedClip pc;
            pc.clip_id = rc.clip_id;
            pc.source = input_root.string() + "/" + rc.clip_id;
            pc.frames = crop_frames(frames, smoothed, options.margin, options.image_side);
            pc.image_side = options.image_side;
            pc.identity = rc.identity;
            pc.smoothing = smoothing_report(raw_track, smoothed);
            prepared.push_back(std::move(pc));
        } catch (const DataError& e) {
            report.rejects.emplace_back(rc.clip_id, e.what());
        }
    }
    if (!prepared.empty()) pack_dataset(prepared, output_root);
    report.accepted = prepared.size();
    return report;
}

}  // namespace setgan
