#pragma once

#include "gazeaffect/timeline.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace gazeaffect {

// Sliding window for per-frame functionals. Each output frame t summarizes the
// trailing window [max(0, t - W + 1), t], W = frames_for_duration(size_seconds).
struct WindowSpec {
    double size_seconds = 4.0;
    // 1 recomputes every frame. Larger steps recompute every step_frames and
    // hold the last vector in between, so the row count never changes.
    std::size_t step_frames = 1;
};

struct GazePoint {
    double h = 0.0;
    double v = 0.0;
};

// start/end index into the coordinate sequence the fixation was found in.
struct Fixation {
    std::size_t start_frame = 0;
    std::size_t end_frame = 0;
    double centroid_h = 0.0;
    double centroid_v = 0.0;
};

struct ZoneGrid {
    std::size_t rows = 3;
    std::size_t cols = 3;
    double h_min = -1.0;
    double h_max = 1.0;
    double v_min = -1.0;
    double v_max = 1.0;

    void validate() const;
};

struct GazeFeatureConfig {
    double dispersion_threshold = 0.05;
    double min_fixation_seconds = 0.1;
    ZoneGrid grid;
};

inline constexpr std::size_t kGazeFeatureCount = 31;

// Column order of extract_gaze_features output.
const std::array<std::string_view, kGazeFeatureCount>& gaze_feature_names();

struct ApproachStats {
    double ratio = 0.0;
    double time_ms = 0.0;
};

// An approach frame is t >= 1 with d[t] < d[t-1].
ApproachStats approach_stats(std::span<const double> distances, FrameRate fps);

// Dispersion-threshold (I-DT) segmentation; dispersion is the bounding-box
// diagonal of the candidate run.
std::vector<Fixation> segment_fixations(std::span<const GazePoint> points, double dispersion_threshold,
                                        std::size_t min_duration_frames);

struct ScanPathStats {
    double mean = 0.0;
    double std = 0.0;
};

// Over distances between consecutive fixation centroids.
ScanPathStats scan_path_stats(std::span<const Fixation> fixations);

struct CoordinateFunctionals {
    double mean = 0.0;
    double iqr12 = 0.0;
    double iqr23 = 0.0;
    double std = 0.0;
    double skew = 0.0;
};

// Quantiles are linearly interpolated at p(N-1); moments are population
// moments; skew is 0 when the variance is below 1e-12.
CoordinateFunctionals coordinate_functionals(std::span<const double> series);

// Periodogram power summed over DFT bin groups {1}, {2}, {3,4}, {5,6}, {7..12}
// of the mean-removed series. Bins above N/2 contribute nothing.
std::array<double, 5> psd_band_powers(std::span<const double> series);

struct ZoneSpread {
    double std_mean = 0.0;
    double std_std = 0.0;
};

struct ZoneSpreadPair {
    ZoneSpread h;
    ZoneSpread v;
};

ZoneSpreadPair fixation_zone_spread(std::span<const GazePoint> points, const ZoneGrid& grid);

struct ClosureStats {
    double mean = 0.0;
    double std = 0.0;
    double skew = 0.0;
};

// Statistics of the lengths of maximal closed-eye runs.
ClosureStats eye_closure_stats(const std::vector<bool>& closed);

// All 31 features for one window of frames. Invalid frames are dropped first;
// a window without valid frames yields all zeros.
std::array<double, kGazeFeatureCount> window_gaze_features(std::span<const GazeFrame> window, FrameRate fps,
                                                           const GazeFeatureConfig& config = {});

FeatureMatrix extract_gaze_features(const GazeLog& log, const WindowSpec& window,
                                    const GazeFeatureConfig& config = {});

}  // namespace gazeaffect
