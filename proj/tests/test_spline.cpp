#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "setgan/core/rng.hpp"
#include "setgan/dataprep.hpp"
#include "setgan/spline.hpp"

using namespace setgan;

namespace {

double total_variation(const std::vector<double>& v) {
    double tv = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) tv += std::abs(v[i] - v[i - 1]);
    return tv;
}

double variance(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return var / static_cast<double>(v.size());
}

BBoxTrack fully_detected_track(const std::vector<double>& series) {
    BBoxTrack t;
    t.frame_count = series.size();
    t.x = series;
    t.y = series;
    t.w.assign(series.size(), 20.0);
    t.h.assign(series.size(), 20.0);
    t.detected.assign(series.size(), 1);
    return t;
}

}  // namespace

TEST(NaturalCubicSpline, InterpolatesKnotValues) {
    const std::vector<double> knots{0, 1, 2.5, 4, 7};
    const std::vector<double> values{1.0, -0.5, 2.0, 0.0, 3.0};
    const NaturalCubicSpline s(knots, values);
    for (std::size_t i = 0; i < knots.size(); ++i)
        EXPECT_NEAR(s(knots[i]), values[i], 1e-12);
}

TEST(NaturalCubicSpline, TwoKnotsIsALine) {
    const NaturalCubicSpline s({0.0, 10.0}, {1.0, 21.0});
    EXPECT_NEAR(s(5.0), 11.0, 1e-12);
    EXPECT_NEAR(s(-2.0), -3.0, 1e-12);  // linear extrapolation
    EXPECT_NEAR(s(12.0), 25.0, 1e-12);
}

TEST(FitNaturalSpline, ReproducesLinearData) {
    std::vector<double> xs, ys;
    for (int i = 0; i < 50; ++i) {
        xs.push_back(i);
        ys.push_back(3.0 + 2.0 * i);
    }
    const auto s = fit_natural_spline_ls(xs, ys, uniform_knots(0.0, 49.0, 8));
    for (int i = 0; i < 50; ++i) EXPECT_NEAR(s(i), 3.0 + 2.0 * i, 1e-7);
}

TEST(SmoothTrack, ConstantSeriesIsAFixedPoint) {
    const std::vector<double> series(30, 17.5);
    const BBoxTrack out = smooth_track(fully_detected_track(series), 8.0);
    for (std::size_t i = 0; i < out.frame_count; ++i) {
        EXPECT_NEAR(out.x[i], 17.5, 1e-6);
        EXPECT_NEAR(out.y[i], 17.5, 1e-6);
        EXPECT_NEAR(out.w[i], 20.0, 1e-6);
        EXPECT_NEAR(out.h[i], 20.0, 1e-6);
    }
}

TEST(SmoothTrack, LinearTrendWithInteriorGapsIsRecoveredExactly) {
    // x_t = 3 + 2t with frames 4-6 missing
    BBoxTrack t;
    t.frame_count = 10;
    for (std::size_t i = 0; i < 10; ++i) {
        t.x.push_back(3.0 + 2.0 * static_cast<double>(i));
        t.y.push_back(50.0 - 1.5 * static_cast<double>(i));
        t.w.push_back(20.0 + 0.5 * static_cast<double>(i));
        t.h.push_back(22.0);
        t.detected.push_back(i >= 4 && i <= 6 ? 0 : 1);
    }
    const BBoxTrack out = smooth_track(t, 8.0);
    for (std::size_t i = 0; i < 10; ++i) {
        EXPECT_NEAR(out.x[i], 3.0 + 2.0 * static_cast<double>(i), 1e-6) << "frame " << i;
        EXPECT_NEAR(out.y[i], 50.0 - 1.5 * static_cast<double>(i), 1e-6);
        EXPECT_NEAR(out.w[i], 20.0 + 0.5 * static_cast<double>(i), 1e-6);
        EXPECT_NEAR(out.h[i], 22.0, 1e-6);
        EXPECT_TRUE(out.detected[i]);
    }
}

// Monte Carlo oracle: smoothing never increases the total variation of noisy
// linear tracks (100 random tracks, all must pass).
TEST(SmoothTrack, TotalVariationNeverIncreasesOnNoisyTracks) {
    Rng rng(77);
    int failures = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t frames = 40 + rng.uniform_index(80);
        std::vector<double> series(frames);
        const double slope = rng.uniform(-2.0, 2.0);
        const double noise = rng.uniform(0.5, 4.0);
        for (std::size_t i = 0; i < frames; ++i)
            series[i] = 40.0 + slope * static_cast<double>(i) + rng.normal(0.0, noise);
        const BBoxTrack in = fully_detected_track(series);
        const BBoxTrack out = smooth_track(in, 8.0);
        if (total_variation(out.x) > total_variation(in.x)) ++failures;
    }
    EXPECT_EQ(failures, 0);
}

// Projection property: re-smoothing a smoothed track changes nothing
// measurable.
TEST(SmoothTrack, IdempotentWithinTolerance) {
    Rng rng(78);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t frames = 60;
        std::vector<double> series(frames);
        for (std::size_t i = 0; i < frames; ++i)
            series[i] = 30.0 + 0.3 * static_cast<double>(i) + rng.normal(0.0, 3.0);
        const BBoxTrack once = smooth_track(fully_detected_track(series), 8.0);
        const BBoxTrack twice = smooth_track(once, 8.0);
        for (std::size_t i = 0; i < frames; ++i) {
            ASSERT_NEAR(twice.x[i], once.x[i], 1e-4);
            ASSERT_NEAR(twice.y[i], once.y[i], 1e-4);
            ASSERT_NEAR(twice.w[i], once.w[i], 1e-4);
            ASSERT_NEAR(twice.h[i], once.h[i], 1e-4);
        }
    }
}

TEST(SmoothTrack, UnitVarianceNoiseIsFlattened) {
    Rng rng(79);
    std::vector<double> noise(100);
    for (auto& v : noise) v = rng.normal(0.0, 1.0);
    // normalize to unit variance exactly
    const double sd = std::sqrt(variance(noise));
    for (auto& v : noise) v /= sd;
    const BBoxTrack out = smooth_track(fully_detected_track(noise), 8.0);
    EXPECT_LT(variance(out.x), 0.2);
}

TEST(SmoothTrack, RejectsFewerThanTwoDetections) {
    BBoxTrack t;
    t.frame_count = 5;
    t.x.assign(5, 1.0);
    t.y.assign(5, 1.0);
    t.w.assign(5, 5.0);
    t.h.assign(5, 5.0);
    t.detected.assign(5, 0);
    t.detected[2] = 1;
    EXPECT_THROW(smooth_track(t, 8.0), DataError);
}

TEST(SmoothTrack, LinearFallbackBelowFourDetections) {
    BBoxTrack t;
    t.frame_count = 12;
    for (std::size_t i = 0; i < 12; ++i) {
        t.x.push_back(1.0 + 2.0 * static_cast<double>(i));
        t.y.push_back(4.0);
        t.w.push_back(9.0);
        t.h.push_back(9.0);
        t.detected.push_back(i == 1 || i == 5 || i == 9 ? 1 : 0);
    }
    const BBoxTrack out = smooth_track(t, 8.0);
    for (std::size_t i = 0; i < 12; ++i)
        EXPECT_NEAR(out.x[i], 1.0 + 2.0 * static_cast<double>(i), 1e-6);
}

// Interpolated values stay inside the hull of the neighboring detections for
// trend inputs.
TEST(SmoothTrack, GapFillStaysInsideNeighborHullForLinearTrends) {
    Rng rng(80);
    for (int trial = 0; trial < 30; ++trial) {
        BBoxTrack t;
        t.frame_count = 24;
        const double a = rng.uniform(-10.0, 10.0), b = rng.uniform(-1.0, 1.0);
        for (std::size_t i = 0; i < t.frame_count; ++i) {
            t.x.push_back(a + b * static_cast<double>(i));
            t.y.push_back(10.0);
            t.w.push_back(15.0);
            t.h.push_back(15.0);
            t.detected.push_back(i >= 10 && i < 14 ? 0 : 1);
        }
        const BBoxTrack out = smooth_track(t, 8.0);
        const double lo = std::min(t.x[9], t.x[14]), hi = std::max(t.x[9], t.x[14]);
        for (std::size_t i = 10; i < 14; ++i) {
            ASSERT_GE(out.x[i], lo - 1e-6);
            ASSERT_LE(out.x[i], hi + 1e-6);
        }
    }
}

TEST(SmoothTrack, OutputSizesStayPositive) {
    Rng rng(81);
    BBoxTrack t;
    t.frame_count = 20;
    for (std::size_t i = 0; i < 20; ++i) {
        t.x.push_back(10.0);
        t.y.push_back(10.0);
        t.w.push_back(std::max(0.5, 3.0 - 0.3 * static_cast<double>(i) + rng.normal(0.0, 0.2)));
        t.h.push_back(2.0);
        t.detected.push_back(1);
    }
    const BBoxTrack out = smooth_track(t, 4.0);
    for (std::size_t i = 0; i < 20; ++i) {
        EXPECT_GT(out.w[i], 0.0);
        EXPECT_GT(out.h[i], 0.0);
    }
}
