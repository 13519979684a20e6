#pragma once

// Reference implementations used only by tests. They are written without
// reusing any library code so that agreement means something.

#include "gazeaffect/gaze_features.hpp"
#include "gazeaffect/timeline.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <random>
#include <vector>

namespace oracle {

double ccc(const std::vector<double>& x, const std::vector<double>& y);
double pearson(const std::vector<double>& x, const std::vector<double>& y);
double sse(const std::vector<double>& x, const std::vector<double>& y);

// |DFT_k|^2 / N of the mean-removed series for k = 0..N-1.
std::vector<double> periodogram(const std::vector<double>& series);

// Brute-force recomputation of the 31 gaze functionals for one window.
std::array<double, gazeaffect::kGazeFeatureCount> gaze_window(const std::vector<gazeaffect::GazeFrame>& window,
                                                             double fps, double dispersion = 0.05,
                                                             double min_fixation_seconds = 0.1);

// Gaze log with fixation clusters, saccades, blinks and tracking dropouts.
gazeaffect::GazeLog random_gaze_log(std::mt19937_64& rng, std::size_t frames, double fps);

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace oracle
