#include "gazeaffect/error.hpp"
#include "gazeaffect/sequence_net.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace gazeaffect;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Sequence random_sequence(std::size_t dim, std::size_t frames, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Sequence s(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(frames));
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = n(rng);
    return s;
}

}  // namespace

TEST(NetworkSpec, ValidatesTopology) {
    EXPECT_THROW(NetworkSpec::stacked(LayerKind::lstm, {}, 3), ConfigError);
    EXPECT_THROW(NetworkSpec::stacked(LayerKind::lstm, {8}, 0), ConfigError);
    EXPECT_THROW(NetworkSpec::stacked(LayerKind::lstm, {8, 0}, 3), ConfigError);
    EXPECT_THROW(NetworkSpec::stacked(LayerKind::blstm, {7}, 3), ConfigError);
    const auto s = NetworkSpec::stacked(LayerKind::blstm, {8, 6}, 5);
    EXPECT_EQ(s.layers.size(), 2u);
    EXPECT_EQ(s.layers[1].units_per_direction(), 3u);
    EXPECT_EQ(s.kind(), LayerKind::blstm);
    EXPECT_EQ(parse_layer_kind("blstm"), LayerKind::blstm);
    EXPECT_THROW(parse_layer_kind("gru"), ConfigError);
}

TEST(InitNetwork, ShapesRangeAndDeterminism) {
    const auto spec = NetworkSpec::stacked(LayerKind::blstm, {8, 6}, 5);
    const auto p = init_network(spec, 1787452436);
    ASSERT_EQ(p.layers.size(), 2u);
    ASSERT_EQ(p.layers[0].directions.size(), 2u);
    EXPECT_EQ(p.layers[0].directions[0].input_weights.rows(), 16);
    EXPECT_EQ(p.layers[0].directions[0].input_weights.cols(), 5);
    EXPECT_EQ(p.layers[1].directions[1].input_weights.cols(), 8);
    EXPECT_EQ(p.layers[1].directions[1].recurrent_weights.cols(), 3);
    EXPECT_EQ(p.readout_weights.cols(), 6);
    EXPECT_EQ(p.parameter_count(), 2u * (16 * 5 + 16 * 4 + 16) + 2u * (12 * 8 + 12 * 3 + 12) + 6u + 1u);
    p.for_each_block([](const Eigen::MatrixXd& b) { EXPECT_LE(b.cwiseAbs().maxCoeff(), 0.1); });
    EXPECT_TRUE(p.layers[0].directions[0].bias.isZero());
    EXPECT_EQ(p, init_network(spec, 1787452436));
    EXPECT_FALSE(p == init_network(spec, 123456789));
}

TEST(NetworkForward, OneOutputPerFrameAndInputChecks) {
    const auto spec = NetworkSpec::stacked(LayerKind::lstm, {4}, 3);
    const auto p = init_network(spec, 1);
    EXPECT_EQ(network_forward(p, spec, random_sequence(3, 17, 2)).size(), 17);
    EXPECT_THROW(network_forward(p, spec, random_sequence(2, 17, 2)), DataError);
    EXPECT_THROW(network_forward(p, spec, Sequence(3, 0)), DataError);
}

TEST(NetworkForward, SingleStepMatchesHandComputation) {
    const auto spec = NetworkSpec::stacked(LayerKind::lstm, {1}, 1);
    NetworkParams p = init_network(spec, 1);
    auto& d = p.layers[0].directions[0];
    d.input_weights << 0.5, -0.3, 0.8, 0.2;  // input, forget, output, cell
    d.recurrent_weights << 0.1, 0.2, -0.1, 0.4;
    d.bias << 0.05, 0.1, -0.05, 0.0;
    p.readout_weights << 1.5;
    p.readout_bias << -0.2;
    Sequence x(1, 2);
    x << 0.7, -0.4;
    const auto y = network_forward(p, spec, x);

    double h = 0.0, c = 0.0;
    std::vector<double> expected;
    for (double xt : {0.7, -0.4}) {
        const double i = sigmoid(0.5 * xt + 0.1 * h + 0.05);
        const double f = sigmoid(-0.3 * xt + 0.2 * h + 0.1);
        const double o = sigmoid(0.8 * xt - 0.1 * h - 0.05);
        const double g = std::tanh(0.2 * xt + 0.4 * h);
        c = f * c + i * g;
        h = o * std::tanh(c);
        expected.push_back(1.5 * h - 0.2);
    }
    EXPECT_NEAR(y[0], expected[0], 1e-15);
    EXPECT_NEAR(y[1], expected[1], 1e-15);
}

TEST(NetworkForward, SingleFrameBlstmEqualsMatchedLstm) {
    const auto lstm = NetworkSpec::stacked(LayerKind::lstm, {3}, 4);
    const auto blstm = NetworkSpec::stacked(LayerKind::blstm, {6}, 4);
    const auto pl = init_network(lstm, 5);
    auto pb = init_network(blstm, 6);
    pb.layers[0].directions[0] = pl.layers[0].directions[0];
    pb.layers[0].directions[1] = pl.layers[0].directions[0];
    pb.readout_weights << 0.5 * pl.readout_weights, 0.5 * pl.readout_weights;
    pb.readout_bias = pl.readout_bias;
    const auto x = random_sequence(4, 1, 7);
    EXPECT_NEAR(network_forward(pb, blstm, x)[0], network_forward(pl, lstm, x)[0], 1e-15);
}

TEST(NetworkForward, BackwardDirectionSeesTheFuture) {
    const auto spec = NetworkSpec::stacked(LayerKind::blstm, {4}, 2);
    const auto p = init_network(spec, 8);
    auto x = random_sequence(2, 10, 9);
    const auto before = network_forward(p, spec, x);
    x(0, 9) += 1.0;
    const auto after = network_forward(p, spec, x);
    EXPECT_NE(before[0], after[0]);

    const auto causal = NetworkSpec::stacked(LayerKind::lstm, {4}, 2);
    const auto q = init_network(causal, 8);
    auto z = random_sequence(2, 10, 9);
    const auto b2 = network_forward(q, causal, z);
    z(0, 9) += 1.0;
    EXPECT_EQ(b2[0], network_forward(q, causal, z)[0]);
}

TEST(BpttGradients, LossIsSumOfSquaredErrors) {
    const auto spec = NetworkSpec::stacked(LayerKind::blstm, {4, 2}, 3);
    const auto p = init_network(spec, 10);
    const auto x = random_sequence(3, 12, 11);
    std::vector<double> y(12, 0.25);
    const auto pred = network_forward(p, spec, x);
    double expected = 0.0;
    for (int t = 0; t < 12; ++t) expected += (pred[t] - 0.25) * (pred[t] - 0.25);
    EXPECT_NEAR(bptt_gradients(p, spec, x, y).loss, expected, 1e-12);
    EXPECT_THROW(bptt_gradients(p, spec, x, std::vector<double>(11, 0.0)), DataError);
}

TEST(GradientCheck, AgreesWithFiniteDifferences) {
    for (auto kind : {LayerKind::lstm, LayerKind::blstm}) {
        for (std::uint64_t seed : {1u, 2u}) {
            const auto report = gradient_check(NetworkSpec::stacked(kind, {8, 6}, 5), seed, 1e-4, 20);
            EXPECT_TRUE(report.passed) << to_string(kind) << " seed " << seed << " worst "
                                       << report.worst_parameter << " " << report.max_relative_error;
            EXPECT_EQ(report.parameters_checked, init_network(NetworkSpec::stacked(kind, {8, 6}, 5), 0).parameter_count());
        }
    }
}

TEST(InjectNoise, SeededAndZeroSigmaIsIdentity) {
    const auto x = random_sequence(3, 20, 12);
    std::mt19937_64 a(1), b(1);
    EXPECT_EQ(inject_noise(x, 0.1, a), inject_noise(x, 0.1, b));
    std::mt19937_64 c(2);
    EXPECT_EQ(inject_noise(x, 0.0, c), x);
    std::mt19937_64 d(3);
    const Sequence big = Sequence::Zero(1, 20000);
    const auto noisy = inject_noise(big, 0.1, d);
    const double var = noisy.array().square().mean();
    EXPECT_NEAR(std::sqrt(var), 0.1, 0.005);
    EXPECT_THROW(inject_noise(x, -1.0, d), ConfigError);
}

TEST(NetworkParams, AddScaledAndZerosLike) {
    const auto spec = NetworkSpec::stacked(LayerKind::lstm, {2}, 2);
    auto p = init_network(spec, 1);
    const auto q = p;
    auto z = p.zeros_like();
    z.for_each_block([](const Eigen::MatrixXd& b) { EXPECT_TRUE(b.isZero()); });
    p.add_scaled(q, 1.0);
    p.add_scaled(q, -1.0);
    EXPECT_EQ(p, q);
    EXPECT_TRUE(p.all_finite());
    p.readout_bias(0, 0) = std::nan("");
    EXPECT_FALSE(p.all_finite());
}
