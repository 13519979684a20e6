#pragma once

#include "gazeaffect/sequence_net.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace gazeaffect {

struct TrainConfig {
    double learning_rate = 1e-5;
    std::uint64_t seed = 1787452436;
    int max_epochs = 100;
    // Stop once the best validation epoch is this many epochs old.
    int patience_epochs = 20;
    double noise_sigma = 0.1;
    std::size_t batch_sequences = 1;
    double momentum = 0.0;

    void validate() const;
};

// One recording: normalized inputs and normalized targets, frame aligned.
struct LabeledSequence {
    Sequence inputs;
    std::vector<double> targets;
};

struct EpochRecord {
    int epoch = 0;
    double train_sse = 0.0;  // on the noisy presentations
    double validation_sse = 0.0;
};

struct TrainingResult {
    NetworkParams params;  // best validation epoch
    std::vector<EpochRecord> history;
    int best_epoch = 0;
    double best_validation_sse = std::numeric_limits<double>::infinity();
    bool stopped_early = false;
};

// Replaces the validation SSE; called once per epoch after the update.
using ValidationScorer = std::function<double(const NetworkParams& params, int epoch)>;

// Noise-free SSE summed over every sequence.
double sequence_sse(const NetworkParams& params, const NetworkSpec& spec, std::span<const LabeledSequence> data);

// Epoch loop: seeded shuffle, per-presentation input noise, BPTT, gradient
// descent with optional momentum, noise-free validation, early stopping.
// Throws DivergenceError on a non-finite loss.
TrainingResult train_network(const NetworkSpec& spec, std::span<const LabeledSequence> train,
                             std::span<const LabeledSequence> validation, const TrainConfig& config,
                             const ValidationScorer& scorer = {});

}  // namespace gazeaffect
