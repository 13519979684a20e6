#include "gazeaffect/error.hpp"
#include "gazeaffect/fusion.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace gazeaffect;

TEST(ShiftValues, MovesAnnotationsBackAndZeroFillsTheTail) {
    const std::vector<double> in{1, 2, 3, 4, 5};
    EXPECT_EQ(shift_values(in, 2), (std::vector<double>{3, 4, 5, 0, 0}));
    EXPECT_EQ(shift_values(in, 0), in);
    EXPECT_THROW(shift_values(in, 5), ConfigError);
}

TEST(ShiftValues, PropertyOnRandomTraces) {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int rep = 0; rep < 300; ++rep) {
        std::vector<double> in(1 + rng() % 200);
        for (auto& x : in) x = u(rng);
        const std::size_t k = rng() % in.size();
        const auto out = shift_values(in, k);
        ASSERT_EQ(out.size(), in.size());
        for (std::size_t t = 0; t < in.size(); ++t) {
            EXPECT_EQ(out[t], t + k < in.size() ? in[t + k] : 0.0);
        }
    }
}

TEST(ShiftAnnotations, KeepsDimensionAndRate) {
    const AnnotationTrace a(Dimension::valence, {0.1, 0.2, 0.3}, FrameRate(30.0));
    const auto s = shift_annotations(a, {1, FrameRate(30.0)});
    EXPECT_EQ(s.dimension(), Dimension::valence);
    EXPECT_EQ(s.fps(), FrameRate(30.0));
    EXPECT_EQ(s.values(), (std::vector<double>{0.2, 0.3, 0.0}));
}

TEST(ConvertShift, ConvertsAcrossRates) {
    EXPECT_EQ(convert_shift({69, FrameRate(25.0)}, FrameRate(30.0)).frames, 83u);
    EXPECT_EQ(convert_shift({59, FrameRate(25.0)}, FrameRate(25.0)).frames, 59u);
    const auto a = convert_shift({69, FrameRate(25.0)}, FrameRate(30.0), 84);
    EXPECT_EQ(a.frames, 84u);
    EXPECT_EQ(a.source_fps, FrameRate(30.0));
    EXPECT_EQ(convert_shift({78, FrameRate(25.0)}, FrameRate(30.0), 96).frames, 96u);
    EXPECT_DOUBLE_EQ((ShiftSpec{69, FrameRate(25.0)}.seconds()), 2.76);
}

TEST(FuseFeatures, ConcatenatesPerFrame) {
    const FrameRate fps(25.0);
    const FeatureMatrix a({"x", "y"}, 2, {1, 2, 3, 4}, fps);
    const FeatureMatrix b({"z"}, 2, {5, 6}, fps);
    const auto f = fuse_features(a, b);
    EXPECT_EQ(f.names(), (std::vector<std::string>{"x", "y", "z"}));
    EXPECT_EQ(f.values(), (std::vector<double>{1, 2, 5, 3, 4, 6}));
}

TEST(FuseFeatures, EmptyModalityIsIdentity) {
    const FrameRate fps(25.0);
    const FeatureMatrix a({"x"}, 3, {1, 2, 3}, fps);
    const FeatureMatrix none({}, 3, {}, fps);
    EXPECT_EQ(fuse_features(a, none), a);
}

TEST(FuseFeatures, SuffixesCollidingNames) {
    const FrameRate fps(25.0);
    const FeatureMatrix a({"mean", "x"}, 1, {1, 2}, fps);
    const FeatureMatrix b({"mean"}, 1, {3}, fps);
    EXPECT_EQ(fuse_features(a, b, "gaze").names(), (std::vector<std::string>{"mean", "x", "mean_gaze"}));
}

TEST(FuseFeatures, RejectsMismatchedFramesAndRates) {
    const FeatureMatrix a({"x"}, 100, std::vector<double>(100, 0.0), FrameRate(25.0));
    const FeatureMatrix b({"y"}, 99, std::vector<double>(99, 0.0), FrameRate(25.0));
    try {
        fuse_features(a, b);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("100"), std::string::npos);
        EXPECT_NE(msg.find("99"), std::string::npos);
    }
    const FeatureMatrix c({"y"}, 100, std::vector<double>(100, 0.0), FrameRate(30.0));
    EXPECT_THROW(fuse_features(a, c), DataError);
}

TEST(NormStats, PooledOverRecordingsWithFlatGuard) {
    const FrameRate fps(25.0);
    std::vector<FeatureMatrix> x{FeatureMatrix({"a", "flat"}, 2, {1, 5, 3, 5}, fps),
                                 FeatureMatrix({"a", "flat"}, 2, {5, 5, 7, 5}, fps)};
    std::vector<AnnotationTrace> y{AnnotationTrace(Dimension::arousal, {0.0, 0.5}, fps),
                                   AnnotationTrace(Dimension::arousal, {-0.5, 0.0}, fps)};
    const auto s = fit_norm_stats(x, y);
    EXPECT_DOUBLE_EQ(s.feature_means[0], 4.0);
    EXPECT_DOUBLE_EQ(s.feature_stds[0], std::sqrt(5.0));
    EXPECT_EQ(s.feature_stds[1], 1.0);
    EXPECT_DOUBLE_EQ(s.target_mean, 0.0);
    EXPECT_DOUBLE_EQ(s.target_std, std::sqrt(0.125));

    const auto n = apply_norm(x[0], s);
    EXPECT_DOUBLE_EQ(n(0, 0), -3.0 / std::sqrt(5.0));
    EXPECT_EQ(n(0, 1), 0.0);
}

TEST(NormStats, TargetRoundTrip) {
    NormStats s;
    s.target_mean = 0.2;
    s.target_std = 0.3;
    const std::vector<double> y{-1.0, 0.0, 0.7};
    const auto f = apply_norm(y, s, NormDirection::forward);
    const auto back = apply_norm(f, s, NormDirection::inverse_target);
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(back[i], y[i], 1e-15);
}

TEST(NormStats, RejectsNameMismatchAndEmptyInput) {
    const FrameRate fps(25.0);
    std::vector<FeatureMatrix> x{FeatureMatrix({"a"}, 1, {1}, fps)};
    std::vector<AnnotationTrace> y{AnnotationTrace(Dimension::arousal, {0.0}, fps)};
    const auto s = fit_norm_stats(x, y);
    EXPECT_THROW(apply_norm(FeatureMatrix({"b"}, 1, {1}, fps), s), DataError);
    EXPECT_THROW(fit_norm_stats({}, {}), ConfigError);
    std::vector<FeatureMatrix> mixed{FeatureMatrix({"a"}, 1, {1}, fps), FeatureMatrix({"b"}, 1, {1}, fps)};
    EXPECT_THROW(fit_norm_stats(mixed, y), DataError);
}
