#include "gazeaffect/fusion.hpp"

#include "gazeaffect/error.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace gazeaffect {

namespace {

constexpr double kStdFloor = 1e-12;

double guarded(double std) { return std < kStdFloor ? 1.0 : std; }

}  // namespace

std::vector<double> shift_values(std::span<const double> values, std::size_t frames) {
    if (frames >= values.size()) {
        throw ConfigError("shift of " + std::to_string(frames) + " frames is not shorter than the " +
                          std::to_string(values.size()) + "-frame trace");
    }
    std::vector<double> out(values.size(), 0.0);
    std::copy(values.begin() + static_cast<std::ptrdiff_t>(frames), values.end(), out.begin());
    return out;
}

AnnotationTrace shift_annotations(const AnnotationTrace& trace, const ShiftSpec& shift) {
    return AnnotationTrace(trace.dimension(), shift_values(trace.values(), shift.frames), trace.fps());
}

ShiftSpec convert_shift(const ShiftSpec& shift, FrameRate target_fps, std::optional<std::size_t> override_frames) {
    if (override_frames) {
        return {*override_frames, target_fps};
    }
    if (shift.source_fps == target_fps) {
        return {shift.frames, target_fps};
    }
    const double frames = std::round(static_cast<double>(shift.frames) / shift.source_fps.fps() * target_fps.fps());
    return {static_cast<std::size_t>(frames), target_fps};
}

FeatureMatrix fuse_features(const FeatureMatrix& a, const FeatureMatrix& b, std::string_view b_tag) {
    if (a.rows() != b.rows()) {
        throw DataError("frame count mismatch " + std::to_string(a.rows()) + " vs " + std::to_string(b.rows()));
    }
    if (!(a.fps() == b.fps())) {
        throw DataError("frame rate mismatch " + format_decimal(a.fps().fps()) + " vs " +
                        format_decimal(b.fps().fps()));
    }
    std::vector<std::string> names = a.names();
    const std::unordered_set<std::string> taken(names.begin(), names.end());
    for (const auto& n : b.names()) {
        names.push_back(taken.contains(n) ? n + "_" + std::string(b_tag) : n);
    }
    const std::size_t width = a.cols() + b.cols();
    std::vector<double> values;
    values.reserve(a.rows() * width);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const auto ra = a.row(r);
        const auto rb = b.row(r);
        values.insert(values.end(), ra.begin(), ra.end());
        values.insert(values.end(), rb.begin(), rb.end());
    }
    return FeatureMatrix(std::move(names), a.rows(), std::move(values), a.fps());
}

NormStats fit_norm_stats(std::span<const FeatureMatrix> train_features, std::span<const AnnotationTrace> train_targets) {
    if (train_features.empty() || train_targets.empty()) {
        throw ConfigError("cannot fit normalization on an empty training set");
    }
    NormStats stats;
    stats.names = train_features.front().names();
    const std::size_t cols = stats.names.size();
    stats.feature_means.assign(cols, 0.0);
    stats.feature_stds.assign(cols, 0.0);

    std::size_t frames = 0;
    for (const auto& m : train_features) {
        if (m.names() != stats.names) {
            throw DataError("training recordings disagree on feature names");
        }
        for (std::size_t r = 0; r < m.rows(); ++r) {
            const auto row = m.row(r);
            for (std::size_t c = 0; c < cols; ++c) stats.feature_means[c] += row[c];
        }
        frames += m.rows();
    }
    for (auto& mean : stats.feature_means) mean /= static_cast<double>(frames);
    for (const auto& m : train_features) {
        for (std::size_t r = 0; r < m.rows(); ++r) {
            const auto row = m.row(r);
            for (std::size_t c = 0; c < cols; ++c) {
                const double d = row[c] - stats.feature_means[c];
                stats.feature_stds[c] += d * d;
            }
        }
    }
    for (auto& s : stats.feature_stds) s = guarded(std::sqrt(s / static_cast<double>(frames)));

    std::size_t target_frames = 0;
    double sum = 0.0;
    for (const auto& t : train_targets) {
        for (double y : t.values()) sum += y;
        target_frames += t.size();
    }
    stats.target_mean = sum / static_cast<double>(target_frames);
    double ss = 0.0;
    for (const auto& t : train_targets) {
        for (double y : t.values()) ss += (y - stats.target_mean) * (y - stats.target_mean);
    }
    stats.target_std = guarded(std::sqrt(ss / static_cast<double>(target_frames)));
    return stats;
}

FeatureMatrix apply_norm(const FeatureMatrix& matrix, const NormStats& stats) {
    if (matrix.names() != stats.names) {
        throw DataError("feature names do not match the normalization statistics (" +
                        std::to_string(matrix.cols()) + " vs " + std::to_string(stats.names.size()) + " columns)");
    }
    std::vector<double> values(matrix.values());
    const std::size_t cols = matrix.cols();
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::size_t c = i % cols;
        values[i] = (values[i] - stats.feature_means[c]) / stats.feature_stds[c];
    }
    return FeatureMatrix(matrix.names(), matrix.rows(), std::move(values), matrix.fps());
}

std::vector<double> apply_norm(std::span<const double> trace, const NormStats& stats, NormDirection direction) {
    std::vector<double> out(trace.begin(), trace.end());
    for (auto& y : out) {
        y = direction == NormDirection::forward ? (y - stats.target_mean) / stats.target_std
                                                : y * stats.target_std + stats.target_mean;
    }
    return out;
}

}  // namespace gazeaffect
