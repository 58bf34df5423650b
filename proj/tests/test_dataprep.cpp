#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "setgan/dataprep.hpp"
#include "setgan/synth.hpp"

using namespace setgan;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "setgan_test_dataprep" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

/// Wraps a detector and forces misses on chosen frames.
class MissInjector : public DetectorAdapter {
public:
    MissInjector(DetectorAdapter& inner, std::vector<std::size_t> misses)
        : inner_(inner), misses_(std::move(misses)) {}

    std::optional<BoundingBox> detect(const GrayImage& frame) override {
        const std::size_t i = cursor_++;
        for (const std::size_t m : misses_)
            if (m == i) return std::nullopt;
        return inner_.detect(frame);
    }

private:
    DetectorAdapter& inner_;
    std::vector<std::size_t> misses_;
    std::size_t cursor_ = 0;
};

}  // namespace

TEST(SpriteDetector, BoxMatchesRenderedExtentAndStaysInBounds) {
    Rng rng(71);
    SpriteDetector det;
    for (int trial = 0; trial < 20; ++trial) {
        const double lo = sprite_margin(64), hi = 64 - lo;
        const MotionState m{rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(0.0, 6.28)};
        const ContentFactors c{SpriteShape::Square, 0.8};
        const GrayImage frame = render_sprite(64, c, m);
        const auto box = det.detect(frame);
        ASSERT_TRUE(box.has_value());
        EXPECT_NEAR(box->x, m.x, 1.5);
        EXPECT_NEAR(box->y, m.y, 1.5);
        EXPECT_GT(box->w, 0.0);
        EXPECT_GT(box->h, 0.0);
        EXPECT_GE(box->x - box->w / 2, 0.0);
        EXPECT_LE(box->x + box->w / 2, 64.0);
        EXPECT_GE(box->y - box->h / 2, 0.0);
        EXPECT_LE(box->y + box->h / 2, 64.0);
    }
    EXPECT_FALSE(det.detect(GrayImage({64, 64})).has_value());  // blank: no box
}

TEST(TrackClip, AllHitsAndRecordedMisses) {
    Rng rng(72);
    const auto traj = sample_trajectory(64, 10, rng);
    std::vector<GrayImage> frames;
    for (const auto& m : traj)
        frames.push_back(render_sprite(64, {SpriteShape::Circle, 0.9}, m));

    SpriteDetector det;
    const BBoxTrack full = track_clip(frames, det);
    EXPECT_EQ(full.frame_count, 10u);
    EXPECT_EQ(full.detected_count(), 10u);

    MissInjector flaky(det, {5});
    const BBoxTrack gappy = track_clip(frames, flaky);
    EXPECT_EQ(gappy.detected_count(), 9u);
    EXPECT_FALSE(gappy.detected[5]);
    EXPECT_TRUE(gappy.detected[4]);
    EXPECT_TRUE(gappy.detected[6]);
}

TEST(TrackClip, ZeroDetectionsRejectsClip) {
    std::vector<GrayImage> frames(4, GrayImage({32, 32}));  // all blank
    SpriteDetector det;
    EXPECT_THROW(track_clip(frames, det), DataError);
    EXPECT_THROW(track_clip({}, det), std::invalid_argument);
}

// Synthetic renderer oracle: with the exact detector, the track must match
// the generating trajectory.
TEST(TrackClip, MatchesGroundTruthTrajectory) {
    Rng rng(73);
    const auto traj = sample_trajectory(64, 20, rng);
    std::vector<GrayImage> frames;
    for (const auto& m : traj)
        frames.push_back(render_sprite(64, {SpriteShape::Circle, 0.8}, m));
    SpriteDetector det;
    const BBoxTrack track = track_clip(frames, det);
    for (std::size_t i = 0; i < 20; ++i) {
        EXPECT_NEAR(track.x[i], traj[i].x, 1.0) << i;
        EXPECT_NEAR(track.y[i], traj[i].y, 1.0) << i;
    }
}

TEST(CropFrames, FullFrameBoxWithZeroMarginIsAWholeFrameResize) {
    Rng rng(74);
    GrayImage frame({64, 64});
    for (std::size_t i = 0; i < frame.size(); ++i)
        frame[i] = static_cast<float>(rng.uniform01());
    BBoxTrack track;
    track.frame_count = 1;
    track.x = {32.0};
    track.y = {32.0};
    track.w = {64.0};
    track.h = {64.0};
    track.detected = {1};

    const auto crops = crop_frames({frame}, track, 0.0, 32);
    ASSERT_EQ(crops.size(), 1u);
    const GrayImage expected = resize_area(frame, 32, 32);
    for (std::size_t i = 0; i < crops[0].size(); ++i)
        ASSERT_NEAR(crops[0][i], 2.0f * expected[i] - 1.0f, 1e-5f);
}

// Aggressive negative margin shrinks the window to (1 + margin) * max(w, h).
TEST(CropFrames, NegativeMarginCropsTighter) {
    // horizontal ramp makes the window extent readable off the output values
    GrayImage frame({64, 64});
    for (std::size_t y = 0; y < 64; ++y)
        for (std::size_t x = 0; x < 64; ++x)
            frame.at2(y, x) = static_cast<float>(x) / 64.0f;
    BBoxTrack track;
    track.frame_count = 1;
    track.x = {32.0};
    track.y = {32.0};
    track.w = {20.0};
    track.h = {20.0};
    track.detected = {1};

    const auto tight = crop_frames({frame}, track, -0.3, 32);  // side 14
    const auto loose = crop_frames({frame}, track, 0.0, 32);   // side 20
    // first output column samples x0 = 32 - side/2
    const double tight_left = (32.0 - 7.0 + 7.0 / 32.0 / 2.0) / 64.0;
    const double loose_left = (32.0 - 10.0 + 10.0 / 32.0 / 2.0) / 64.0;
    EXPECT_NEAR(0.5 * (tight[0].at2(16, 0) + 1.0), tight_left, 0.01);
    EXPECT_NEAR(0.5 * (loose[0].at2(16, 0) + 1.0), loose_left, 0.01);
}

TEST(CropFrames, DegenerateBoxesDropFramesAndRejectClips) {
    GrayImage frame = GrayImage::full({64, 64}, 0.5f);
    BBoxTrack track;
    track.frame_count = 4;
    track.x.assign(4, 32.0);
    track.y.assign(4, 32.0);
    track.w = {20.0, 20.0, 20.0, 4.0};  // one tiny box: dropped (25% > 20%)
    track.h = {20.0, 20.0, 20.0, 4.0};
    track.detected.assign(4, 1);
    const std::vector<GrayImage> frames(4, frame);
    EXPECT_THROW(crop_frames(frames, track, 0.0, 32), DataError);

    track.frame_count = 6;
    track.x.assign(6, 32.0);
    track.y.assign(6, 32.0);
    track.w = {20, 20, 20, 20, 20, 4};
    track.h = {20, 20, 20, 20, 20, 4};
    track.detected.assign(6, 1);
    const std::vector<GrayImage> six(6, frame);
    const auto crops = crop_frames(six, track, 0.0, 32);  // 1/6 < 20%: kept
    EXPECT_EQ(crops.size(), 5u);
}

// Round trip on the synthetic corpus: after detect + smooth + crop the sprite
// sits at the same relative position in every output (center offset < 1 px).
// The trajectory must be gentle enough for the spline to track it; fast jitter
// is exactly what smoothing is meant to discard.
TEST(CropFrames, SpriteIsCenteredAfterSmoothing) {
    std::vector<GrayImage> frames;
    const std::size_t n_frames = 40;
    for (std::size_t t = 0; t < n_frames; ++t) {
        MotionState m;
        m.x = 32.0 + 6.0 * std::sin(2.0 * M_PI * static_cast<double>(t) / 40.0);
        m.y = 32.0 + 6.0 * std::cos(2.0 * M_PI * static_cast<double>(t) / 40.0);
        m.angle = 0.1 * static_cast<double>(t);
        frames.push_back(render_sprite(64, {SpriteShape::Circle, 0.9}, m));
    }
    SpriteDetector det;
    const BBoxTrack smoothed = smooth_track(track_clip(frames, det), 8.0);
    const auto crops = crop_frames(frames, smoothed, 0.15, 32);
    ASSERT_EQ(crops.size(), n_frames);
    for (const auto& crop : crops) {
        const auto pos = sprite_position(to_unit_range(crop));
        ASSERT_TRUE(pos.has_value());
        EXPECT_NEAR((*pos)[0], 16.0, 1.0);
        EXPECT_NEAR((*pos)[1], 16.0, 1.0);
    }
}

TEST(PackDataset, RoundTripsThroughTheLoader) {
    const auto dir = fresh_dir("pack");
    Rng rng(76);
    PreparedClip clip;
    clip.clip_id = "clip_a";
    clip.source = "unit-test";
    clip.image_side = 16;
    clip.identity = "id07";
    for (int t = 0; t < 5; ++t) {
        GrayImage f({16, 16});
        for (std::size_t i = 0; i < f.size(); ++i)
            f[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
        clip.frames.push_back(std::move(f));
    }
    const auto manifests = pack_dataset({clip}, dir);
    ASSERT_EQ(manifests.size(), 1u);
    ASSERT_EQ(manifests[0].frames.size(), 5u);

    const Dataset ds = load_dataset(dir);
    ASSERT_EQ(ds.clips.size(), 1u);
    ASSERT_EQ(ds.clips[0].frames.size(), 5u);
    EXPECT_EQ(ds.clips[0].manifest.identity.value_or(""), "id07");
    for (std::size_t t = 0; t < 5; ++t)
        for (std::size_t i = 0; i < 256; ++i)
            ASSERT_NEAR(ds.clips[0].frames[t][i], clip.frames[t][i], 1.0f / 127.0f);
}

TEST(PackDataset, EmptyInputIsRejected) {
    EXPECT_THROW(pack_dataset({}, fresh_dir("empty")), DataError);
}

TEST(PrepDataset, EndToEndOnSyntheticCorpusIsDeterministic) {
    const auto raw = fresh_dir("raw");
    const auto out_a = fresh_dir("out_a");
    const auto out_b = fresh_dir("out_b");
    Rng rng(77);
    gen_corpus(raw, 3, 2, 10, 64, rng);

    PrepOptions opts;
    opts.image_side = 32;
    opts.margin = 0.15;
    {
        SpriteDetector det;
        const PrepReport r = prep_dataset(raw, out_a, det, opts);
        EXPECT_EQ(r.accepted, 6u);
        EXPECT_TRUE(r.rejects.empty());
    }
    {
        SpriteDetector det;
        prep_dataset(raw, out_b, det, opts);
    }
    EXPECT_EQ(file_bytes(out_a / "manifest.jsonl"), file_bytes(out_b / "manifest.jsonl"));

    const Dataset ds = load_dataset(out_a);
    EXPECT_EQ(ds.clips.size(), 6u);
    EXPECT_EQ(ds.image_side, 32u);
    for (const auto& clip : ds.clips) {
        ASSERT_TRUE(clip.manifest.smoothing.has_value());
        for (const auto& f : clip.frames)
            for (std::size_t i = 0; i < f.size(); ++i) {
                ASSERT_GE(f[i], -1.0f);
                ASSERT_LE(f[i], 1.0f);
            }
    }
}

TEST(PrepDataset, ClipsWithoutDetectionsAreReportedNotFatal) {
    const auto raw = fresh_dir("raw_misses");
    Rng rng(78);
    gen_corpus(raw, 2, 1, 8, 64, rng);
    // blank out one whole clip: zero detections there
    const auto manifests = read_manifest(raw);
    for (const auto& rel : manifests[0].frames)
        save_png_gray(raw / rel, GrayImage({64, 64}));

    SpriteDetector det;
    const auto out = fresh_dir("out_misses");
    const PrepReport r = prep_dataset(raw, out, det, PrepOptions{0.15, 8.0, 32});
    EXPECT_EQ(r.accepted, 1u);
    ASSERT_EQ(r.rejects.size(), 1u);
    EXPECT_EQ(r.rejects[0].first, manifests[0].clip_id);
}

TEST(FileDetector, ReplaysOfflineDetections) {
    const auto dir = fresh_dir("filedet");
    {
        std::ofstream os(dir / "c.jsonl");
        os << R"({"frame":0,"x":10.0,"y":12.0,"w":8.0,"h":8.0})" << '\n';
        os << R"({"frame":2,"x":11.0,"y":13.0,"w":8.0,"h":8.0})" << '\n';
    }
    FileDetector det(dir / "c.jsonl");
    const GrayImage dummy({32, 32});
    const auto b0 = det.detect(dummy);
    const auto b1 = det.detect(dummy);
    const auto b2 = det.detect(dummy);
    ASSERT_TRUE(b0.has_value());
    EXPECT_DOUBLE_EQ(b0->x, 10.0);
    EXPECT_FALSE(b1.has_value());  // frame 1 missing from the file
    ASSERT_TRUE(b2.has_value());
    EXPECT_DOUBLE_EQ(b2->y, 13.0);
    det.reset();
    EXPECT_TRUE(det.detect(dummy).has_value());
}
