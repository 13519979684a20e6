#include "gazeaffect/error.hpp"
#include "gazeaffect/metrics.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace gazeaffect;

namespace {

double ccc_of(const std::vector<double>& x, const std::vector<double>& y) { return ccc(PredictionPair(x, y)).value; }

}  // namespace

TEST(Ccc, WorkedExample) {
    EXPECT_NEAR(ccc_of({1, 2, 3, 4}, {2, 3, 4, 5}), 5.0 / 7.0, 1e-15);
    EXPECT_DOUBLE_EQ(ccc_of({1, 2, 3, 4}, {1, 2, 3, 4}), 1.0);
    EXPECT_DOUBLE_EQ(ccc_of({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
}

TEST(Ccc, DegenerateDenominatorReturnsZeroWithFlag) {
    const std::vector<double> c(5, 0.3);
    const auto r = ccc(PredictionPair(c, c));
    EXPECT_EQ(r.value, 0.0);
    EXPECT_TRUE(r.degenerate);
    EXPECT_FALSE(ccc(PredictionPair(std::vector<double>{0, 1}, std::vector<double>{0, 1})).degenerate);
}

TEST(Ccc, MatchesIndependentOracle) {
    std::mt19937_64 rng(43);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int rep = 0; rep < 300; ++rep) {
        std::vector<double> x(2 + rng() % 499), y(x.size());
        const double bias = n(rng), scale = 0.1 + std::abs(n(rng));
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = n(rng);
            y[i] = scale * x[i] + bias + n(rng);
        }
        EXPECT_NEAR(ccc_of(x, y), oracle::ccc(x, y), 1e-12);
    }
}

TEST(Ccc, SymmetricBoundedAndAffineInvariant) {
    std::mt19937_64 rng(47);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> x(30), y(30), ax(30), ay(30);
        const double a = 0.5 + std::abs(n(rng)), b = n(rng);
        for (std::size_t i = 0; i < 30; ++i) {
            x[i] = n(rng);
            y[i] = x[i] + n(rng);
            ax[i] = a * x[i] + b;
            ay[i] = a * y[i] + b;
        }
        const double c = ccc_of(x, y);
        EXPECT_NEAR(c, ccc_of(y, x), 1e-14);
        EXPECT_LE(std::abs(c), 1.0);
        EXPECT_NEAR(c, ccc_of(ax, ay), 1e-12);
        EXPECT_LE(c, pearson(PredictionPair(x, y)).value + 1e-14);
    }
}

TEST(Pearson, MatchesOracleAndFlagsConstants) {
    const std::vector<double> x{1, 2, 4, 8}, y{2, 1, 5, 7};
    EXPECT_NEAR(pearson(PredictionPair(x, y)).value, oracle::pearson(x, y), 1e-14);
    const auto r = pearson(PredictionPair(x, std::vector<double>(4, 1.0)));
    EXPECT_EQ(r.value, 0.0);
    EXPECT_TRUE(r.degenerate);
}

TEST(PredictionPair, RejectsBadInput) {
    EXPECT_THROW(PredictionPair(std::vector<double>{1, 2}, std::vector<double>{1}), DataError);
    EXPECT_THROW(PredictionPair(std::vector<double>{1}, std::vector<double>{1}), DataError);
    EXPECT_THROW(PredictionPair(std::vector<double>{1, std::nan("")}, std::vector<double>{1, 2}), DataError);
    EXPECT_THROW(PredictionPair(std::vector<double>{1, 2},
                                std::vector<double>{1, std::numeric_limits<double>::infinity()}),
                 DataError);
}

TEST(Sse, MatchesLoopAndChecksLength) {
    const std::vector<double> x{1, 2, 3}, y{1, 0, 5};
    EXPECT_DOUBLE_EQ(sse(x, y), 8.0);
    EXPECT_DOUBLE_EQ(sse(x, y), oracle::sse(x, y));
    EXPECT_THROW(sse(x, std::vector<double>{1}), DataError);
}

TEST(RelativeImprovement, TableCells) {
    EXPECT_NEAR(relative_improvement(0.754, 0.742) * 100.0, 1.617, 1e-3);
    EXPECT_NEAR(relative_improvement(0.277, 0.261) * 100.0, 6.130, 1e-3);
    EXPECT_DOUBLE_EQ(relative_improvement(0.5, 0.5), 0.0);
    EXPECT_LT(relative_improvement(0.4, 0.5), 0.0);
    EXPECT_THROW(relative_improvement(0.5, 0.0), Error);
}
