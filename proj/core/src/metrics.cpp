#include "gazeaffect/metrics.hpp"

#include "gazeaffect/error.hpp"

#include <cmath>
#include <string>

namespace gazeaffect {

namespace {

constexpr double kDenominatorFloor = 1e-12;

struct PairMoments {
    double mean_x = 0.0;
    double mean_y = 0.0;
    double var_x = 0.0;
    double var_y = 0.0;
    double cov = 0.0;
};

PairMoments moments(const PredictionPair& pair) {
    const auto x = pair.x();
    const auto y = pair.y();
    const auto n = static_cast<double>(x.size());
    PairMoments m;
    for (std::size_t i = 0; i < x.size(); ++i) {
        m.mean_x += x[i];
        m.mean_y += y[i];
    }
    m.mean_x /= n;
    m.mean_y /= n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - m.mean_x;
        const double dy = y[i] - m.mean_y;
        m.var_x += dx * dx;
        m.var_y += dy * dy;
        m.cov += dx * dy;
    }
    m.var_x /= n;
    m.var_y /= n;
    m.cov /= n;
    return m;
}

}  // namespace

PredictionPair::PredictionPair(std::span<const double> x, std::span<const double> y) : x_(x), y_(y) {
    if (x.size() != y.size()) {
        throw DataError("prediction/truth length mismatch " + std::to_string(x.size()) + " vs " +
                        std::to_string(y.size()));
    }
    if (x.size() < 2) {
        throw DataError("need at least two frames to correlate, got " + std::to_string(x.size()));
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
            throw DataError("non-finite value at frame " + std::to_string(i));
        }
    }
}

Correlation ccc(const PredictionPair& pair) {
    const auto m = moments(pair);
    const double mean_gap = m.mean_x - m.mean_y;
    const double denom = m.var_x + m.var_y + mean_gap * mean_gap;
    if (denom < kDenominatorFloor) {
        return {0.0, true};
    }
    return {2.0 * m.cov / denom, false};
}

Correlation pearson(const PredictionPair& pair) {
    const auto m = moments(pair);
    const double denom = std::sqrt(m.var_x) * std::sqrt(m.var_y);
    if (denom < kDenominatorFloor) {
        return {0.0, true};
    }
    return {m.cov / denom, false};
}

double sse(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw DataError("prediction/truth length mismatch " + std::to_string(x.size()) + " vs " +
                        std::to_string(y.size()));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        total += d * d;
    }
    return total;
}

double relative_improvement(double candidate, double baseline) {
    if (baseline == 0.0) {
        throw ConfigError("relative improvement over a zero baseline is undefined");
    }
    return (candidate - baseline) / baseline;
}

}  // namespace gazeaffect
