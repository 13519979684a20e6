#pragma once

#include "gazeaffect/timeline.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gazeaffect {

enum class LayerKind { lstm, blstm };

std::string_view to_string(LayerKind kind) noexcept;
LayerKind parse_layer_kind(std::string_view text);

struct LayerSpec {
    LayerKind kind = LayerKind::lstm;
    // Output width. A blstm layer splits it evenly across the two directions.
    std::size_t size = 0;

    std::size_t directions() const noexcept { return kind == LayerKind::blstm ? 2 : 1; }
    std::size_t units_per_direction() const noexcept { return size / directions(); }

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct NetworkSpec {
    std::vector<LayerSpec> layers;
    std::size_t input_dim = 0;
    std::size_t output_dim = 1;

    // Throws ConfigError when the topology is unusable.
    void validate() const;
    LayerKind kind() const;  // kind of the first layer

    static NetworkSpec stacked(LayerKind kind, const std::vector<std::size_t>& sizes, std::size_t input_dim);

    friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

// Gate blocks are stacked row-wise in this order, `units` rows each.
enum class Gate { input = 0, forget = 1, output = 2, cell = 3 };
inline constexpr std::size_t kGateCount = 4;
std::string_view to_string(Gate gate) noexcept;

struct DirectionParams {
    Eigen::MatrixXd input_weights;      // 4U x in
    Eigen::MatrixXd recurrent_weights;  // 4U x U
    Eigen::MatrixXd bias;               // 4U x 1

    std::size_t units() const noexcept { return static_cast<std::size_t>(recurrent_weights.cols()); }
};

struct LayerParams {
    std::vector<DirectionParams> directions;  // [forward] or [forward, backward]
};

struct NetworkParams {
    std::vector<LayerParams> layers;
    Eigen::MatrixXd readout_weights;  // 1 x width of the last layer
    Eigen::MatrixXd readout_bias;     // 1 x 1

    // Visits every parameter block in a fixed order.
    template <typename F>
    void for_each_block(F&& fn) {
        visit_blocks(*this, fn);
    }
    template <typename F>
    void for_each_block(F&& fn) const {
        visit_blocks(*this, fn);
    }

    std::size_t parameter_count() const;
    bool all_finite() const;
    NetworkParams zeros_like() const;
    // this += scale * other, block by block.
    void add_scaled(const NetworkParams& other, double scale);

    friend bool operator==(const NetworkParams& a, const NetworkParams& b);

private:
    template <typename Self, typename F>
    static void visit_blocks(Self& self, F& fn) {
        for (auto& layer : self.layers) {
            for (auto& d : layer.directions) {
                fn(d.input_weights);
                fn(d.recurrent_weights);
                fn(d.bias);
            }
        }
        fn(self.readout_weights);
        fn(self.readout_bias);
    }
};

// input_dim x frames; one column per frame.
using Sequence = Eigen::MatrixXd;

Sequence to_sequence(const FeatureMatrix& features);

// Weights uniform in [-0.1, 0.1] from a generator keyed by seed; zero biases.
NetworkParams init_network(const NetworkSpec& spec, std::uint64_t seed);

// One prediction per frame.
Eigen::VectorXd network_forward(const NetworkParams& params, const NetworkSpec& spec, const Sequence& sequence);

struct GradientResult {
    NetworkParams gradients;
    double loss = 0.0;  // sum of squared errors over the sequence
};

// Full-sequence backpropagation through time for the SSE loss.
GradientResult bptt_gradients(const NetworkParams& params, const NetworkSpec& spec, const Sequence& sequence,
                              std::span<const double> targets);

// Fresh i.i.d. N(0, sigma^2) noise on every element.
Sequence inject_noise(const Sequence& sequence, double sigma, std::mt19937_64& rng);

struct GradientCheckReport {
    double max_relative_error = 0.0;
    std::size_t parameters_checked = 0;
    std::string worst_parameter;
    bool passed = false;
};

// Compares bptt_gradients against central differences on a random sequence
// and random targets drawn from seed. Relative error per parameter is
// |ga - gn| / max(|ga|, |gn|, 1e-8).
GradientCheckReport gradient_check(const NetworkSpec& spec, std::uint64_t seed, double tolerance,
                                   std::size_t frames = 20, double step = 1e-5);

}  // namespace gazeaffect
