#pragma once

#include <span>

namespace gazeaffect {

// x holds predictions, y the ground truth. Throws DataError on unequal
// lengths, fewer than two frames, or non-finite values.
class PredictionPair {
public:
    PredictionPair(std::span<const double> x, std::span<const double> y);

    std::span<const double> x() const noexcept { return x_; }
    std::span<const double> y() const noexcept { return y_; }

private:
    std::span<const double> x_;
    std::span<const double> y_;
};

// value is 0 and degenerate is set when the denominator vanishes.
struct Correlation {
    double value = 0.0;
    bool degenerate = false;
};

// Concordance correlation coefficient with population (1/N) moments:
//   2 cov(x, y) / (var(x) + var(y) + (mean(x) - mean(y))^2)
Correlation ccc(const PredictionPair& pair);

// cov(x, y) / (std(x) std(y)), population moments.
Correlation pearson(const PredictionPair& pair);

// Sum of squared errors. Only requires equal lengths.
double sse(std::span<const double> x, std::span<const double> y);

// (candidate - baseline) / baseline, e.g. 0.0162 for +1.62%.
double relative_improvement(double candidate, double baseline);

}  // namespace gazeaffect
