#include "gazeaffect/sequence_net.hpp"

#include "gazeaffect/error.hpp"

#include <algorithm>
#include <cmath>

namespace gazeaffect {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInitRange = 0.1;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Activations of one direction of one layer over a whole sequence.
struct DirectionTrace {
    MatrixXd gates;      // 4U x T, post-nonlinearity (i, f, o logistic; g tanh)
    MatrixXd cells;      // U x T
    MatrixXd cell_tanh;  // U x T
    MatrixXd hidden;     // U x T
    bool reversed = false;
};

struct LayerTrace {
    MatrixXd input;  // in x T
    std::vector<DirectionTrace> directions;
    MatrixXd output;  // size x T
};

struct ForwardTrace {
    std::vector<LayerTrace> layers;
    VectorXd predictions;
};

DirectionTrace run_direction(const DirectionParams& p, const MatrixXd& input, bool reversed) {
    const Index units = static_cast<Index>(p.units());
    const Index frames = input.cols();
    DirectionTrace tr;
    tr.reversed = reversed;
    tr.gates = p.input_weights * input;
    tr.gates.colwise() += p.bias.col(0);
    tr.cells.resize(units, frames);
    tr.cell_tanh.resize(units, frames);
    tr.hidden.resize(units, frames);

    VectorXd h = VectorXd::Zero(units);
    VectorXd c = VectorXd::Zero(units);
    VectorXd pre(4 * units);
    for (Index s = 0; s < frames; ++s) {
        const Index t = reversed ? frames - 1 - s : s;
        pre.noalias() = tr.gates.col(t);
        pre.noalias() += p.recurrent_weights * h;
        auto gates = tr.gates.col(t);
        for (Index k = 0; k < 3 * units; ++k) gates[k] = logistic(pre[k]);
        for (Index k = 3 * units; k < 4 * units; ++k) gates[k] = std::tanh(pre[k]);
        const auto in_gate = gates.segment(0, units);
        const auto forget_gate = gates.segment(units, units);
        const auto out_gate = gates.segment(2 * units, units);
        const auto candidate = gates.segment(3 * units, units);
        c = forget_gate.cwiseProduct(c) + in_gate.cwiseProduct(candidate);
        tr.cells.col(t) = c;
        tr.cell_tanh.col(t) = c.array().tanh().matrix();
        h = out_gate.cwiseProduct(tr.cell_tanh.col(t));
        tr.hidden.col(t) = h;
    }
    return tr;
}

void check_input(const NetworkSpec& spec, const NetworkParams& params, const Sequence& sequence) {
    if (static_cast<std::size_t>(sequence.rows()) != spec.input_dim) {
        throw DataError("input width " + std::to_string(sequence.rows()) + " does not match network input " +
                        std::to_string(spec.input_dim));
    }
    if (sequence.cols() == 0) {
        throw DataError("empty input sequence");
    }
    if (params.layers.size() != spec.layers.size()) {
        throw ConfigError("parameter set does not match the network topology");
    }
    if (!sequence.allFinite()) {
        throw DataError("input sequence contains non-finite values");
    }
}

ForwardTrace forward_trace(const NetworkParams& params, const NetworkSpec& spec, const Sequence& sequence) {
    check_input(spec, params, sequence);
    ForwardTrace trace;
    trace.layers.reserve(params.layers.size());
    const MatrixXd* input = &sequence;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        LayerTrace layer;
        layer.input = *input;
        const auto& dirs = params.layers[l].directions;
        Index width = 0;
        for (std::size_t d = 0; d < dirs.size(); ++d) {
            layer.directions.push_back(run_direction(dirs[d], layer.input, d == 1));
            width += static_cast<Index>(dirs[d].units());
        }
        layer.output.resize(width, sequence.cols());
        Index row = 0;
        for (const auto& d : layer.directions) {
            layer.output.middleRows(row, d.hidden.rows()) = d.hidden;
            row += d.hidden.rows();
        }
        trace.layers.push_back(std::move(layer));
        input = &trace.layers.back().output;
    }
    trace.predictions = (params.readout_weights * *input).transpose();
    trace.predictions.array() += params.readout_bias(0, 0);
    return trace;
}

// Accumulates gradients of one direction; returns dL/d(input).
MatrixXd backprop_direction(const DirectionParams& p, const DirectionTrace& tr, const MatrixXd& input,
                            const MatrixXd& d_hidden, DirectionParams& grad) {
    const Index units = static_cast<Index>(p.units());
    const Index frames = input.cols();
    MatrixXd d_pre(4 * units, frames);
    MatrixXd prev_hidden = MatrixXd::Zero(units, frames);

    VectorXd dh_next = VectorXd::Zero(units);
    VectorXd dc_next = VectorXd::Zero(units);
    VectorXd dh(units);
    VectorXd dc(units);
    VectorXd c_prev(units);

    for (Index s = frames - 1; s >= 0; --s) {
        const Index t = tr.reversed ? frames - 1 - s : s;
        const bool has_prev = s > 0;
        const Index t_prev = tr.reversed ? t + 1 : t - 1;
        const auto gates = tr.gates.col(t);
        const auto in_gate = gates.segment(0, units).array();
        const auto forget_gate = gates.segment(units, units).array();
        const auto out_gate = gates.segment(2 * units, units).array();
        const auto candidate = gates.segment(3 * units, units).array();
        const auto cell_tanh = tr.cell_tanh.col(t).array();

        dh = d_hidden.col(t) + dh_next;
        dc.array() = dc_next.array() + dh.array() * out_gate * (1.0 - cell_tanh * cell_tanh);
        if (has_prev) {
            c_prev = tr.cells.col(t_prev);
        } else {
            c_prev.setZero();
        }

        auto d = d_pre.col(t);
        d.segment(0, units).array() = dc.array() * candidate * in_gate * (1.0 - in_gate);
        d.segment(units, units).array() = dc.array() * c_prev.array() * forget_gate * (1.0 - forget_gate);
        d.segment(2 * units, units).array() = dh.array() * cell_tanh * out_gate * (1.0 - out_gate);
        d.segment(3 * units, units).array() = dc.array() * in_gate * (1.0 - candidate * candidate);

        dh_next.noalias() = p.recurrent_weights.transpose() * d;
        dc_next.array() = dc.array() * forget_gate;
        if (has_prev) {
            prev_hidden.col(t) = tr.hidden.col(t_prev);
        }
    }
    grad.input_weights.noalias() += d_pre * input.transpose();
    grad.recurrent_weights.noalias() += d_pre * prev_hidden.transpose();
    grad.bias.col(0) += d_pre.rowwise().sum();
    return p.input_weights.transpose() * d_pre;
}

}  // namespace

std::string_view to_string(LayerKind kind) noexcept { return kind == LayerKind::blstm ? "blstm" : "lstm"; }

LayerKind parse_layer_kind(std::string_view text) {
    if (text == "lstm") return LayerKind::lstm;
    if (text == "blstm") return LayerKind::blstm;
    throw ConfigError("unknown layer kind '" + std::string(text) + "' (expected lstm|blstm)");
}

std::string_view to_string(Gate gate) noexcept {
    switch (gate) {
        case Gate::input: return "input";
        case Gate::forget: return "forget";
        case Gate::output: return "output";
        case Gate::cell: return "cell";
    }
    return "?";
}

void NetworkSpec::validate() const {
    if (layers.empty()) {
        throw ConfigError("network needs at least one hidden layer");
    }
    if (input_dim == 0) {
        throw ConfigError("network input dimension must be positive");
    }
    if (output_dim != 1) {
        throw ConfigError("only single-output regression is supported");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.size == 0) {
            throw ConfigError("layer " + std::to_string(i) + " has no units");
        }
        if (l.kind == LayerKind::blstm && l.size % 2 != 0) {
            throw ConfigError("blstm layer " + std::to_string(i) + " size " + std::to_string(l.size) +
                              " is not even");
        }
    }
}

LayerKind NetworkSpec::kind() const { return layers.empty() ? LayerKind::lstm : layers.front().kind; }

NetworkSpec NetworkSpec::stacked(LayerKind kind, const std::vector<std::size_t>& sizes, std::size_t input_dim) {
    NetworkSpec spec;
    spec.input_dim = input_dim;
    for (auto s : sizes) spec.layers.push_back({kind, s});
    spec.validate();
    return spec;
}

std::size_t NetworkParams::parameter_count() const {
    std::size_t n = 0;
    for_each_block([&](const MatrixXd& b) { n += static_cast<std::size_t>(b.size()); });
    return n;
}

bool NetworkParams::all_finite() const {
    bool ok = true;
    for_each_block([&](const MatrixXd& b) { ok = ok && b.allFinite(); });
    return ok;
}

NetworkParams NetworkParams::zeros_like() const {
    NetworkParams out = *this;
    out.for_each_block([](MatrixXd& b) { b.setZero(); });
    return out;
}

void NetworkParams::add_scaled(const NetworkParams& other, double scale) {
    std::vector<const MatrixXd*> src;
    other.for_each_block([&](const MatrixXd& b) { src.push_back(&b); });
    std::size_t i = 0;
    for_each_block([&](MatrixXd& b) { b += scale * *src.at(i++); });
}

bool operator==(const NetworkParams& a, const NetworkParams& b) {
    std::vector<const MatrixXd*> blocks;
    a.for_each_block([&](const MatrixXd& m) { blocks.push_back(&m); });
    std::size_t i = 0;
    bool same = true;
    b.for_each_block([&](const MatrixXd& m) {
        if (i >= blocks.size()) {
            same = false;
            return;
        }
        const auto& other = *blocks[i++];
        same = same && other.rows() == m.rows() && other.cols() == m.cols() && other == m;
    });
    return same && i == blocks.size();
}

Sequence to_sequence(const FeatureMatrix& features) {
    Sequence seq(static_cast<Index>(features.cols()), static_cast<Index>(features.rows()));
    for (std::size_t r = 0; r < features.rows(); ++r) {
        const auto row = features.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            seq(static_cast<Index>(c), static_cast<Index>(r)) = row[c];
        }
    }
    return seq;
}

NetworkParams init_network(const NetworkSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(-kInitRange, kInitRange);
    auto random_matrix = [&](Index rows, Index cols) {
        MatrixXd m(rows, cols);
        // Column-major fill; the order is part of the determinism contract.
        for (Index j = 0; j < cols; ++j) {
            for (Index i = 0; i < rows; ++i) m(i, j) = uniform(rng);
        }
        return m;
    };

    NetworkParams params;
    std::size_t in = spec.input_dim;
    for (const auto& layer : spec.layers) {
        LayerParams lp;
        const auto units = static_cast<Index>(layer.units_per_direction());
        for (std::size_t d = 0; d < layer.directions(); ++d) {
            DirectionParams dp;
            dp.input_weights = random_matrix(4 * units, static_cast<Index>(in));
            dp.recurrent_weights = random_matrix(4 * units, units);
            dp.bias = MatrixXd::Zero(4 * units, 1);
            lp.directions.push_back(std::move(dp));
        }
        params.layers.push_back(std::move(lp));
        in = layer.size;
    }
    params.readout_weights = random_matrix(1, static_cast<Index>(in));
    params.readout_bias = MatrixXd::Zero(1, 1);
    return params;
}

Eigen::VectorXd network_forward(const NetworkParams& params, const NetworkSpec& spec, const Sequence& sequence) {
    return forward_trace(params, spec, sequence).predictions;
}

GradientResult bptt_gradients(const NetworkParams& params, const NetworkSpec& spec, const Sequence& sequence,
                              std::span<const double> targets) {
    if (targets.size() != static_cast<std::size_t>(sequence.cols())) {
        throw DataError("target length " + std::to_string(targets.size()) + " does not match sequence length " +
                        std::to_string(sequence.cols()));
    }
    const auto trace = forward_trace(params, spec, sequence);
    const Index frames = sequence.cols();

    GradientResult result;
    result.gradients = params.zeros_like();
    Eigen::RowVectorXd d_out(frames);
    for (Index t = 0; t < frames; ++t) {
        const double err = trace.predictions[t] - targets[static_cast<std::size_t>(t)];
        result.loss += err * err;
        d_out[t] = 2.0 * err;
    }

    const auto& top = trace.layers.back().output;
    result.gradients.readout_weights.noalias() = d_out * top.transpose();
    result.gradients.readout_bias(0, 0) = d_out.sum();
    MatrixXd d_hidden = params.readout_weights.transpose() * d_out;

    for (std::size_t l = params.layers.size(); l-- > 0;) {
        const auto& layer = trace.layers[l];
        const auto& dirs = params.layers[l].directions;
        MatrixXd d_input = MatrixXd::Zero(layer.input.rows(), frames);
        Index row = 0;
        for (std::size_t d = 0; d < dirs.size(); ++d) {
            const Index units = static_cast<Index>(dirs[d].units());
            d_input += backprop_direction(dirs[d], layer.directions[d], layer.input, d_hidden.middleRows(row, units),
                                          result.gradients.layers[l].directions[d]);
            row += units;
        }
        d_hidden = std::move(d_input);
    }
    return result;
}

Sequence inject_noise(const Sequence& sequence, double sigma, std::mt19937_64& rng) {
    if (!(sigma >= 0.0)) {
        throw ConfigError("noise sigma must be non-negative");
    }
    Sequence out = sequence;
    if (sigma == 0.0) {
        return out;
    }
    std::normal_distribution<double> normal(0.0, sigma);
    for (Index j = 0; j < out.cols(); ++j) {
        for (Index i = 0; i < out.rows(); ++i) out(i, j) += normal(rng);
    }
    return out;
}

GradientCheckReport gradient_check(const NetworkSpec& spec, std::uint64_t seed, double tolerance, std::size_t frames,
                                   double step) {
    spec.validate();
    NetworkParams params = init_network(spec, seed);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(-0.5, 0.5);
    Sequence seq(static_cast<Index>(spec.input_dim), static_cast<Index>(frames));
    for (Index j = 0; j < seq.cols(); ++j) {
        for (Index i = 0; i < seq.rows(); ++i) seq(i, j) = normal(rng);
    }
    std::vector<double> targets(frames);
    for (auto& y : targets) y = uniform(rng);

    const auto analytic = bptt_gradients(params, spec, seq, targets);
    std::vector<const MatrixXd*> grad_blocks;
    analytic.gradients.for_each_block([&](const MatrixXd& b) { grad_blocks.push_back(&b); });

    // loss(w+h) - loss(w-h) = sum_t (p+ - p-)(p+ + p- - 2y): same central
    // difference, without cancelling two large sums against each other.
    auto loss_difference = [&](const Eigen::VectorXd& up, const Eigen::VectorXd& down) {
        double total = 0.0;
        for (Index t = 0; t < up.size(); ++t) {
            total += (up[t] - down[t]) * (up[t] + down[t] - 2.0 * targets[static_cast<std::size_t>(t)]);
        }
        return total;
    };

    GradientCheckReport report;
    std::size_t block_index = 0;
    params.for_each_block([&](MatrixXd& block) {
        const auto& grad = *grad_blocks[block_index];
        for (Index k = 0; k < block.size(); ++k) {
            double& w = block.data()[k];
            const double saved = w;
            w = saved + step;
            const Eigen::VectorXd up = network_forward(params, spec, seq);
            w = saved - step;
            const Eigen::VectorXd down = network_forward(params, spec, seq);
            w = saved;
            const double numeric = loss_difference(up, down) / (2.0 * step);
            const double exact = grad.data()[k];
            const double scale = std::max({std::abs(exact), std::abs(numeric), 1e-8});
            const double rel = std::abs(exact - numeric) / scale;
            ++report.parameters_checked;
            if (rel >= report.max_relative_error) {
                report.max_relative_error = rel;
                report.worst_parameter = "block " + std::to_string(block_index) + " element " + std::to_string(k);
            }
        }
        ++block_index;
    });
    report.passed = report.max_relative_error < tolerance;
    return report;
}

}  // namespace gazeaffect
