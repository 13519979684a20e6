#include "gazeaffect/gaze_features.hpp"

#include "gazeaffect/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace gazeaffect {

namespace {

constexpr double kVarianceFloor = 1e-12;

struct Moments {
    double mean = 0.0;
    double std = 0.0;
    double skew = 0.0;
};

template <typename Range, typename Proj>
Moments population_moments(const Range& values, Proj proj) {
    Moments out;
    const auto n = static_cast<double>(std::size(values));
    if (n == 0.0) {
        return out;
    }
    double sum = 0.0;
    for (const auto& x : values) sum += proj(x);
    out.mean = sum / n;
    double m2 = 0.0;
    double m3 = 0.0;
    for (const auto& x : values) {
        const double d = proj(x) - out.mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    out.std = std::sqrt(m2);
    out.skew = m2 < kVarianceFloor ? 0.0 : m3 / std::pow(m2, 1.5);
    return out;
}

double interpolated_quantile(const std::vector<double>& sorted, double p) {
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

struct BoundingBox {
    double h_min, h_max, v_min, v_max;

    explicit BoundingBox(const GazePoint& p) : h_min(p.h), h_max(p.h), v_min(p.v), v_max(p.v) {}

    void add(const GazePoint& p) {
        h_min = std::min(h_min, p.h);
        h_max = std::max(h_max, p.h);
        v_min = std::min(v_min, p.v);
        v_max = std::max(v_max, p.v);
    }
    double diagonal() const { return std::hypot(h_max - h_min, v_max - v_min); }
};

std::size_t cell_of(double x, double lo, double hi, std::size_t cells) {
    const double scaled = (x - lo) / (hi - lo) * static_cast<double>(cells);
    if (!(scaled > 0.0)) {
        return 0;
    }
    return std::min(static_cast<std::size_t>(scaled), cells - 1);
}

}  // namespace

const std::array<std::string_view, kGazeFeatureCount>& gaze_feature_names() {
    static const std::array<std::string_view, kGazeFeatureCount> names = {
        "approach_ratio",    "approach_time_ms",  "scanpath_mean",      "scanpath_std",
        "h_mean",            "h_iqr12",           "h_iqr23",            "h_std",
        "h_skew",            "h_psd_band1",       "h_psd_band2",        "h_psd_band3",
        "h_psd_band4",       "h_psd_band5",       "h_zone_std_mean",    "h_zone_std_std",
        "v_mean",            "v_iqr12",           "v_iqr23",            "v_std",
        "v_skew",            "v_psd_band1",       "v_psd_band2",        "v_psd_band3",
        "v_psd_band4",       "v_psd_band5",       "v_zone_std_mean",    "v_zone_std_std",
        "closure_runlen_mean", "closure_runlen_std", "closure_runlen_skew",
    };
    return names;
}

void ZoneGrid::validate() const {
    if (rows < 1 || cols < 1) {
        throw ConfigError("zone grid needs at least one row and one column");
    }
    if (!(h_max > h_min) || !(v_max > v_min)) {
        throw ConfigError("zone grid bounds are degenerate");
    }
}

ApproachStats approach_stats(std::span<const double> distances, FrameRate fps) {
    ApproachStats out;
    if (distances.size() < 2) {
        return out;
    }
    std::size_t approach_frames = 0;
    std::size_t runs = 0;
    bool in_run = false;
    for (std::size_t t = 1; t < distances.size(); ++t) {
        const bool approaching = distances[t] < distances[t - 1];
        if (approaching) {
            ++approach_frames;
            if (!in_run) ++runs;
        }
        in_run = approaching;
    }
    out.ratio = static_cast<double>(approach_frames) / static_cast<double>(distances.size() - 1);
    if (runs > 0) {
        out.time_ms = static_cast<double>(approach_frames) / static_cast<double>(runs) * fps.frame_ms();
    }
    return out;
}

std::vector<Fixation> segment_fixations(std::span<const GazePoint> points, double dispersion_threshold,
                                        std::size_t min_duration_frames) {
    std::vector<Fixation> out;
    const std::size_t n = points.size();
    const std::size_t min_len = std::max<std::size_t>(min_duration_frames, 1);
    std::size_t i = 0;
    while (i + min_len <= n) {
        BoundingBox box(points[i]);
        for (std::size_t k = i + 1; k < i + min_len; ++k) box.add(points[k]);
        if (box.diagonal() > dispersion_threshold) {
            ++i;
            continue;
        }
        std::size_t end = i + min_len - 1;
        while (end + 1 < n) {
            BoundingBox grown = box;
            grown.add(points[end + 1]);
            if (grown.diagonal() > dispersion_threshold) break;
            box = grown;
            ++end;
        }
        Fixation fix;
        fix.start_frame = i;
        fix.end_frame = end;
        for (std::size_t k = i; k <= end; ++k) {
            fix.centroid_h += points[k].h;
            fix.centroid_v += points[k].v;
        }
        const auto count = static_cast<double>(end - i + 1);
        fix.centroid_h /= count;
        fix.centroid_v /= count;
        out.push_back(fix);
        i = end + 1;
    }
    return out;
}

ScanPathStats scan_path_stats(std::span<const Fixation> fixations) {
    if (fixations.size() < 2) {
        return {};
    }
    std::vector<double> segments;
    segments.reserve(fixations.size() - 1);
    for (std::size_t k = 1; k < fixations.size(); ++k) {
        segments.push_back(std::hypot(fixations[k].centroid_h - fixations[k - 1].centroid_h,
                                      fixations[k].centroid_v - fixations[k - 1].centroid_v));
    }
    const auto m = population_moments(segments, [](double x) { return x; });
    return {m.mean, m.std};
}

CoordinateFunctionals coordinate_functionals(std::span<const double> series) {
    CoordinateFunctionals out;
    if (series.empty()) {
        return out;
    }
    std::vector<double> sorted(series.begin(), series.end());
    std::sort(sorted.begin(), sorted.end());
    const double q1 = interpolated_quantile(sorted, 0.25);
    const double q2 = interpolated_quantile(sorted, 0.50);
    const double q3 = interpolated_quantile(sorted, 0.75);
    const auto m = population_moments(series, [](double x) { return x; });
    out.mean = m.mean;
    out.iqr12 = q2 - q1;
    out.iqr23 = q3 - q2;
    out.std = m.std;
    out.skew = m.skew;
    return out;
}

std::array<double, 5> psd_band_powers(std::span<const double> series) {
    std::array<double, 5> bands{};
    const std::size_t n = series.size();
    if (n < 2) {
        return bands;
    }
    double mean = 0.0;
    for (double x : series) mean += x;
    mean /= static_cast<double>(n);

    // bin k -> band index
    constexpr std::array<int, 13> kBandOfBin = {-1, 0, 1, 2, 2, 3, 3, 4, 4, 4, 4, 4, 4};
    const double two_pi_over_n = 2.0 * std::numbers::pi / static_cast<double>(n);
    for (std::size_t k = 1; k < kBandOfBin.size() && 2 * k <= n; ++k) {
        double re = 0.0;
        double im = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const double angle = two_pi_over_n * static_cast<double>((k * t) % n);
            const double x = series[t] - mean;
            re += x * std::cos(angle);
            im -= x * std::sin(angle);
        }
        bands[kBandOfBin[k]] += (re * re + im * im) / static_cast<double>(n);
    }
    return bands;
}

ZoneSpreadPair fixation_zone_spread(std::span<const GazePoint> points, const ZoneGrid& grid) {
    grid.validate();
    std::vector<std::vector<GazePoint>> cells(grid.rows * grid.cols);
    for (const auto& p : points) {
        const auto col = cell_of(p.h, grid.h_min, grid.h_max, grid.cols);
        const auto row = cell_of(p.v, grid.v_min, grid.v_max, grid.rows);
        cells[row * grid.cols + col].push_back(p);
    }
    std::vector<double> h_stds;
    std::vector<double> v_stds;
    for (const auto& cell : cells) {
        if (cell.size() < 2) continue;
        h_stds.push_back(population_moments(cell, [](const GazePoint& p) { return p.h; }).std);
        v_stds.push_back(population_moments(cell, [](const GazePoint& p) { return p.v; }).std);
    }
    ZoneSpreadPair out;
    if (h_stds.empty()) {
        return out;
    }
    const auto identity = [](double x) { return x; };
    const auto mh = population_moments(h_stds, identity);
    const auto mv = population_moments(v_stds, identity);
    out.h = {mh.mean, mh.std};
    out.v = {mv.mean, mv.std};
    return out;
}

ClosureStats eye_closure_stats(const std::vector<bool>& closed) {
    std::vector<double> runs;
    std::size_t current = 0;
    for (bool c : closed) {
        if (c) {
            ++current;
        } else if (current > 0) {
            runs.push_back(static_cast<double>(current));
            current = 0;
        }
    }
    if (current > 0) runs.push_back(static_cast<double>(current));
    if (runs.empty()) {
        return {};
    }
    const auto m = population_moments(runs, [](double x) { return x; });
    return {m.mean, m.std, m.skew};
}

std::array<double, kGazeFeatureCount> window_gaze_features(std::span<const GazeFrame> window, FrameRate fps,
                                                           const GazeFeatureConfig& config) {
    std::array<double, kGazeFeatureCount> out{};
    std::vector<GazePoint> points;
    std::vector<double> hs;
    std::vector<double> vs;
    std::vector<double> distances;
    std::vector<bool> closed;
    points.reserve(window.size());
    for (const auto& f : window) {
        if (!f.valid) continue;
        points.push_back({f.h, f.v});
        hs.push_back(f.h);
        vs.push_back(f.v);
        distances.push_back(std::hypot(f.h, f.v));
        closed.push_back(f.eye_closed);
    }
    if (points.empty()) {
        return out;
    }

    const auto approach = approach_stats(distances, fps);
    const auto fixations = segment_fixations(points, config.dispersion_threshold,
                                             frames_for_duration(config.min_fixation_seconds, fps));
    const auto scan = scan_path_stats(fixations);
    const auto zones = fixation_zone_spread(points, config.grid);
    const auto closure = eye_closure_stats(closed);

    std::size_t i = 0;
    out[i++] = approach.ratio;
    out[i++] = approach.time_ms;
    out[i++] = scan.mean;
    out[i++] = scan.std;
    auto axis = [&](const std::vector<double>& series, const ZoneSpread& zone) {
        const auto f = coordinate_functionals(series);
        out[i++] = f.mean;
        out[i++] = f.iqr12;
        out[i++] = f.iqr23;
        out[i++] = f.std;
        out[i++] = f.skew;
        for (double b : psd_band_powers(series)) out[i++] = b;
        out[i++] = zone.std_mean;
        out[i++] = zone.std_std;
    };
    axis(hs, zones.h);
    axis(vs, zones.v);
    out[i++] = closure.mean;
    out[i++] = closure.std;
    out[i++] = closure.skew;
    return out;
}

FeatureMatrix extract_gaze_features(const GazeLog& log, const WindowSpec& window, const GazeFeatureConfig& config) {
    if (log.frames.empty()) {
        throw DataError("gaze log has no frames");
    }
    if (window.step_frames < 1) {
        throw ConfigError("window step must be at least one frame");
    }
    config.grid.validate();
    const std::size_t width = frames_for_duration(window.size_seconds, log.fps);
    const std::size_t n = log.frames.size();
    std::vector<double> values(n * kGazeFeatureCount);
    std::span<const GazeFrame> frames(log.frames);
    for (std::size_t t = 0; t < n; ++t) {
        double* row = values.data() + t * kGazeFeatureCount;
        if (t % window.step_frames != 0) {
            std::copy_n(row - kGazeFeatureCount, kGazeFeatureCount, row);
            continue;
        }
        const std::size_t start = t + 1 >= width ? t + 1 - width : 0;
        const auto features = window_gaze_features(frames.subspan(start, t - start + 1), log.fps, config);
        std::copy(features.begin(), features.end(), row);
    }
    const auto& names = gaze_feature_names();
    return FeatureMatrix(std::vector<std::string>(names.begin(), names.end()), n, std::move(values), log.fps);
}

}  // namespace gazeaffect
