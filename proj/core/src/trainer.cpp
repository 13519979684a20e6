#include "gazeaffect/trainer.hpp"

#include "gazeaffect/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace gazeaffect {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ConfigError("learning rate must be positive");
    }
    if (max_epochs < 1) {
        throw ConfigError("max_epochs must be at least 1");
    }
    if (patience_epochs < 1 || patience_epochs >= max_epochs) {
        throw ConfigError("patience must be in [1, max_epochs)");
    }
    if (!(noise_sigma >= 0.0)) {
        throw ConfigError("noise sigma must be non-negative");
    }
    if (batch_sequences < 1) {
        throw ConfigError("batch size must be at least one sequence");
    }
    if (!(momentum >= 0.0) || momentum >= 1.0) {
        throw ConfigError("momentum must be in [0, 1)");
    }
}

double sequence_sse(const NetworkParams& params, const NetworkSpec& spec, std::span<const LabeledSequence> data) {
    double total = 0.0;
    for (const auto& s : data) {
        const Eigen::VectorXd pred = network_forward(params, spec, s.inputs);
        for (Eigen::Index t = 0; t < pred.size(); ++t) {
            const double e = pred[t] - s.targets[static_cast<std::size_t>(t)];
            total += e * e;
        }
    }
    return total;
}

TrainingResult train_network(const NetworkSpec& spec, std::span<const LabeledSequence> train,
                             std::span<const LabeledSequence> validation, const TrainConfig& config,
                             const ValidationScorer& scorer) {
    spec.validate();
    config.validate();
    if (train.empty()) {
        throw ConfigError("training partition is empty");
    }
    if (validation.empty() && !scorer) {
        throw ConfigError("validation partition is empty");
    }
    for (const auto& s : train) {
        if (s.targets.size() != static_cast<std::size_t>(s.inputs.cols())) {
            throw DataError("training sequence and targets differ in length");
        }
    }

    NetworkParams params = init_network(spec, config.seed);
    NetworkParams velocity = params.zeros_like();
    // Separate stream from the initializer so init stays a pure function of the seed.
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32), 0x5eedu};
    std::mt19937_64 rng(seq);

    TrainingResult result;
    result.params = params;
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double train_sse = 0.0;
        NetworkParams batch_grad = params.zeros_like();
        std::size_t in_batch = 0;
        for (std::size_t k = 0; k < order.size(); ++k) {
            const auto& sample = train[order[k]];
            const Sequence noisy = inject_noise(sample.inputs, config.noise_sigma, rng);
            const auto g = bptt_gradients(params, spec, noisy, sample.targets);
            train_sse += g.loss;
            batch_grad.add_scaled(g.gradients, 1.0);
            if (++in_batch == config.batch_sequences || k + 1 == order.size()) {
                if (config.momentum > 0.0) {
                    velocity.for_each_block([&](Eigen::MatrixXd& b) { b *= config.momentum; });
                    velocity.add_scaled(batch_grad, -config.learning_rate);
                    params.add_scaled(velocity, 1.0);
                } else {
                    params.add_scaled(batch_grad, -config.learning_rate);
                }
                batch_grad.for_each_block([](Eigen::MatrixXd& b) { b.setZero(); });
                in_batch = 0;
            }
        }
        if (!std::isfinite(train_sse) || !params.all_finite()) {
            throw DivergenceError("training diverged in epoch " + std::to_string(epoch) + " (last finite epoch " +
                                      std::to_string(epoch - 1) + ")",
                                  epoch - 1);
        }
        const double val_sse = scorer ? scorer(params, epoch) : sequence_sse(params, spec, validation);
        if (!std::isfinite(val_sse)) {
            throw DivergenceError("validation error is not finite in epoch " + std::to_string(epoch) +
                                      " (last finite epoch " + std::to_string(epoch - 1) + ")",
                                  epoch - 1);
        }
        result.history.push_back({epoch, train_sse, val_sse});
        if (val_sse < result.best_validation_sse) {
            result.best_validation_sse = val_sse;
            result.best_epoch = epoch;
            result.params = params;
        } else if (epoch - result.best_epoch >= config.patience_epochs) {
            result.stopped_early = true;
            break;
        }
    }
    return result;
}

}  // namespace gazeaffect
