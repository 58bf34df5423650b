#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "setgan/core/errors.hpp"
#include "setgan/core/image.hpp"
#include "setgan/core/tensor.hpp"

namespace setgan {

/// Total-variation summary of the track smoothing applied to one clip.
struct SmoothingReport {
    double pre_tv_x = 0, pre_tv_y = 0, pre_tv_w = 0, pre_tv_h = 0;
    double post_tv_x = 0, post_tv_y = 0, post_tv_w = 0, post_tv_h = 0;
};

/// One preprocessed short clip: ordered frame files plus provenance.
struct ClipManifest {
    std::string clip_id;
    std::string source;
    std::vector<std::string> frames;  // paths relative to the dataset root
    std::size_t image_side = 0;
    std::optional<std::string> identity;
    std::optional<SmoothingReport> smoothing;
};

inline nlohmann::json to_json(const ClipManifest& m) {
    nlohmann::json j{{"clip_id", m.clip_id},
                     {"source", m.source},
                     {"frames", m.frames},
                     {"image_side", m.image_side}};
    if (m.identity) j["identity"] = *m.identity;
    if (m.smoothing) {
        const auto& s = *m.smoothing;
        j["smoothing"] = {
            {"pre_tv", {{"x", s.pre_tv_x}, {"y", s.pre_tv_y}, {"w", s.pre_tv_w}, {"h", s.pre_tv_h}}},
            {"post_tv",
             {{"x", s.post_tv_x}, {"y", s.post_tv_y}, {"w", s.post_tv_w}, {"h", s.post_tv_h}}}};
    }
    return j;
}

inline ClipManifest clip_manifest_from_json(const nlohmann::json& j) {
    ClipManifest m;
    m.clip_id = j.at("clip_id").get<std::string>();
    m.source = j.at("source").get<std::string>();
    m.frames = j.at("frames").get<std::vector<std::string>>();
    m.image_side = j.at("image_side").get<std::size_t>();
    if (j.contains("identity")) m.identity = j.at("identity").get<std::string>();
    if (j.contains("smoothing")) {
        SmoothingReport s;
        const auto& pre = j.at("smoothing").at("pre_tv");
        const auto& post = j.at("smoothing").at("post_tv");
        s.pre_tv_x = pre.at("x").get<double>();
        s.pre_tv_y = pre.at("y").get<double>();
        s.pre_tv_w = pre.at("w").get<double>();
        s.pre_tv_h = pre.at("h").get<double>();
        s.post_tv_x = post.at("x").get<double>();
        s.post_tv_y = post.at("y").get<double>();
        s.post_tv_w = post.at("w").get<double>();
        s.post_tv_h = post.at("h").get<double>();
        m.smoothing = s;
    }
    return m;
}

/// Writes <root>/manifest.jsonl, one clip record per line.
inline void write_manifest(const std::filesystem::path& root,
                           const std::vector<ClipManifest>& clips) {
    std::ofstream os(root / "manifest.jsonl", std::ios::trunc);
    if (!os) throw DataError("write_manifest: cannot open " + (root / "manifest.jsonl").string());
    for (const auto& c : clips) os << to_json(c).dump() << '\n';
    if (!os) throw DataError("write_manifest: write failed");
}

inline std::vector<ClipManifest> read_manifest(const std::filesystem::path& root) {
    std::ifstream is(root / "manifest.jsonl");
    if (!is) throw DataError("read_manifest: cannot open " + (root / "manifest.jsonl").string());
    std::vector<ClipManifest> clips;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        clips.push_back(clip_manifest_from_json(nlohmann::json::parse(line)));
    }
    return clips;
}

/// A clip with its frames decoded into signed-range (H, W) tensors.
struct LoadedClip {
    ClipManifest manifest;
    std::vector<Tensor<float>> frames;  // values in [-1, 1]
};

struct Dataset {
    std::filesystem::path root;
    std::size_t image_side = 0;
    std::vector<LoadedClip> clips;
};

/// Loads a packed dataset into memory. Every frame must decode to the
/// manifest's image_side; empty datasets or clips are rejected.
inline Dataset load_dataset(const std::filesystem::path& root) {
    Dataset ds;
    ds.root = root;
    const auto manifests = read_manifest(root);
    if (manifests.empty()) throw DataError("load_dataset: empty manifest in " + root.string());
    for (const auto& m : manifests) {
        if (m.frames.empty()) throw DataError("load_dataset: clip without frames: " + m.clip_id);
        LoadedClip clip;
        clip.manifest = m;
        clip.frames.reserve(m.frames.size());
        for (const auto& rel : m.frames) {
            GrayImage unit = load_png_gray(root / rel);
            if (unit.dim(0) != m.image_side || unit.dim(1) != m.image_side)
                throw DataError("load_dataset: frame size mismatch in " + rel);
            clip.frames.push_back(to_signed_range(unit));
        }
        if (ds.image_side == 0)
            ds.image_side = m.image_side;
        else if (ds.image_side != m.image_side)
            throw DataError("load_dataset: inconsistent image_side across clips");
        ds.clips.push_back(std::move(clip));
    }
    return ds;
}

/// n frames of one clip, order randomized; the real-set sample of Eq. (1).
struct FrameSet {
    std::size_t clip_index = 0;
    std::vector<Tensor<float>> frames;  // signed range, (S, S)
};

}  // namespace setgan
