#pragma once

#include "gazeaffect/fusion.hpp"
#include "gazeaffect/sequence_net.hpp"
#include "gazeaffect/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gazeaffect {

inline constexpr int kModelFormatVersion = 1;

struct ModelMetadata {
    std::uint64_t seed = 0;
    double learning_rate = 0.0;
    std::string corpus;
    std::string modality;
    std::string timestamp;  // ISO 8601, UTC

    friend bool operator==(const ModelMetadata&, const ModelMetadata&) = default;
};

struct TrainedModel {
    NetworkSpec spec;
    NetworkParams params;
    NormStats norm_stats;
    Dimension dimension = Dimension::arousal;
    ShiftSpec shift_used;
    std::vector<EpochRecord> history;
    int best_epoch = 0;
    ModelMetadata metadata;
};

// Normalize, run the network, map back to annotation units. No noise.
std::vector<double> predict_trace(const TrainedModel& model, const FeatureMatrix& features);

// JSON with every double written in shortest round-trip form, so a reloaded
// model predicts bit-identically.
void save_model(const TrainedModel& model, const std::filesystem::path& path);

// Throws DataError on malformed or truncated files and on a format version
// other than kModelFormatVersion.
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace gazeaffect
