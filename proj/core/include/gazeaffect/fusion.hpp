#pragma once

#include "gazeaffect/timeline.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gazeaffect {

// Annotation lag compensation, in frames at source_fps.
struct ShiftSpec {
    std::size_t frames = 0;
    FrameRate source_fps{25.0};

    double seconds() const noexcept { return static_cast<double>(frames) / source_fps.fps(); }
};

// output[t] = input[t + k] for t < N - k, 0.0 afterwards.
AnnotationTrace shift_annotations(const AnnotationTrace& trace, const ShiftSpec& shift);
std::vector<double> shift_values(std::span<const double> values, std::size_t frames);

// round(frames / source_fps * target_fps) unless an explicit override is given.
ShiftSpec convert_shift(const ShiftSpec& shift, FrameRate target_fps,
                        std::optional<std::size_t> override_frames = std::nullopt);

// Per-frame concatenation a ++ b. Names in b that collide with a name in a get
// "_<b_tag>" appended.
FeatureMatrix fuse_features(const FeatureMatrix& a, const FeatureMatrix& b, std::string_view b_tag = "gaze");

struct NormStats {
    std::vector<std::string> names;
    std::vector<double> feature_means;
    std::vector<double> feature_stds;
    double target_mean = 0.0;
    double target_std = 1.0;

    friend bool operator==(const NormStats&, const NormStats&) = default;
};

// Pooled over every frame of every training recording. Standard deviations
// below 1e-12 are stored as 1.
NormStats fit_norm_stats(std::span<const FeatureMatrix> train_features,
                         std::span<const AnnotationTrace> train_targets);

enum class NormDirection { forward, inverse_target };

// (x - mean) / std per column. Throws DataError on a feature name mismatch.
FeatureMatrix apply_norm(const FeatureMatrix& matrix, const NormStats& stats);

// forward: (y - target_mean) / target_std; inverse_target: y * target_std + target_mean.
std::vector<double> apply_norm(std::span<const double> trace, const NormStats& stats, NormDirection direction);

}  // namespace gazeaffect
