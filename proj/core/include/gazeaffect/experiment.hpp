#pragma once

#include "gazeaffect/fusion.hpp"
#include "gazeaffect/gaze_features.hpp"
#include "gazeaffect/model.hpp"
#include "gazeaffect/sequence_net.hpp"
#include "gazeaffect/timeline.hpp"
#include "gazeaffect/trainer.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gazeaffect {

enum class Modality { speech, gaze, fused };

std::string_view to_string(Modality m) noexcept;
Modality parse_modality(std::string_view text);

// Shift sweep around an anchor: anchor + j * stride for |j * stride| <= range.
// A stride of at least the range evaluates the anchor alone.
struct ShiftSweepSpec {
    std::optional<std::size_t> anchor_frames;  // default: 59 arousal / 78 valence at 25 fps
    double range_seconds = 1.0;
    std::size_t stride = 3;
    Modality modality = Modality::fused;
};

struct NetworkChoice {
    LayerKind kind = LayerKind::blstm;
    std::vector<std::size_t> sizes;

    friend bool operator==(const NetworkChoice&, const NetworkChoice&) = default;
};

struct ExperimentConfig {
    std::filesystem::path train_manifest;
    std::optional<std::filesystem::path> test_manifest;
    Dimension dimension = Dimension::arousal;
    std::vector<Modality> modalities{Modality::speech, Modality::gaze, Modality::fused};
    double arousal_window_seconds = 4.0;
    double valence_window_seconds = 6.0;
    ShiftSweepSpec sweep;
    // Shift used by intra/cross runs, in frames at the training corpus rate.
    // Per-network entries win over shift_frames; both default to the anchor.
    std::optional<std::size_t> shift_frames;
    std::map<LayerKind, std::size_t> shift_by_network;
    // Shift on the cross-corpus test side; computed from the rate ratio when unset.
    std::optional<std::size_t> cross_shift_override;
    bool cross_both_directions = false;
    std::vector<NetworkChoice> networks{{LayerKind::lstm, {80, 60}}, {LayerKind::blstm, {40, 30}}};
    std::vector<double> learning_rates{1e-5};
    std::vector<std::uint64_t> seeds{1787452436};
    TrainConfig training;  // learning_rate and seed are taken from the grids
    GazeFeatureConfig gaze;
    std::filesystem::path output_dir = "results";
    std::size_t jobs = 1;

    void validate() const;
    double window_seconds() const noexcept;
    std::size_t anchor_frames(FrameRate fps) const;
    std::vector<std::size_t> sweep_shifts(FrameRate fps) const;
    std::size_t shift_for(LayerKind kind, FrameRate fps) const;
};

// Relative paths in the file resolve against the config file's directory.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
void save_experiment_config(const ExperimentConfig& config, const std::filesystem::path& path);

struct RecordingData {
    std::string id;
    Partition partition = Partition::train;
    FeatureMatrix speech;
    FeatureMatrix gaze;
    AnnotationTrace annotation;

    FeatureMatrix features(Modality modality) const;
};

struct CorpusData {
    std::string name;
    FrameRate fps{25.0};
    std::vector<RecordingData> recordings;

    std::vector<const RecordingData*> partition(Partition p) const;
};

// Loads every recording, extracts gaze functionals with the dimension's
// window, and checks that all modalities have the same frame count.
CorpusData load_corpus_data(const CorpusManifest& manifest, Dimension dimension, const ExperimentConfig& config);

struct ResultRow {
    Dimension dimension = Dimension::arousal;
    Modality modality = Modality::fused;
    LayerKind network = LayerKind::blstm;
    std::size_t shift_frames = 0;
    std::uint64_t seed = 0;
    double learning_rate = 0.0;
    double validation_ccc = 0.0;        // NaN for a diverged run
    std::optional<double> test_ccc;     // only for selected runs
    std::string train_corpus;
    std::string test_corpus;
    std::size_t test_shift_frames = 0;
    bool selected = false;              // lowest validation SSE in its cell
};

struct ResultsTable {
    std::vector<ResultRow> rows;
};

// Grid point of one training run.
struct RunRequest {
    Modality modality = Modality::fused;
    NetworkChoice network;
    std::size_t shift_frames = 0;
    double learning_rate = 0.0;
    std::uint64_t seed = 0;
};

struct RunOutcome {
    RunRequest request;
    std::optional<TrainedModel> model;  // empty when training diverged
    double validation_ccc = 0.0;
    double validation_sse = 0.0;
    std::string error;
};

// Shift annotations, fit normalization on the train partition, train with
// early stopping on validation, and score validation CCC in annotation units.
RunOutcome execute_run(const CorpusData& corpus, Dimension dimension, const RunRequest& request,
                       const ExperimentConfig& config);

// CCC of the model on a partition after shifting its annotations.
double evaluate_partition(const TrainedModel& model, const CorpusData& corpus, Partition partition,
                          Modality modality, std::size_t shift_frames);

struct SweepResult {
    ResultsTable table;
    std::map<LayerKind, std::size_t> best_shift;
    std::map<LayerKind, double> best_ccc;
};

SweepResult run_shift_sweep(const ExperimentConfig& config);

// {"dimension": ..., "best_shift": {"lstm": n, ...}, "best_ccc": {...}}
void save_sweep_best(const SweepResult& result, Dimension dimension, const std::filesystem::path& path);
// The best_shift block of a file written by save_sweep_best.
std::map<LayerKind, std::size_t> load_sweep_best(const std::filesystem::path& path);

struct IntraResult {
    ResultsTable table;
    std::vector<TrainedModel> selected_models;  // one per (modality, network)
    // (fused - best unimodal) / best unimodal on validation CCC, per network.
    std::map<LayerKind, double> fused_improvement;
    // Cells in which every grid point diverged.
    std::vector<std::string> unresolved_cells;
};

IntraResult run_intra_corpus(const ExperimentConfig& config);

struct CrossResult {
    ResultsTable table;
    std::vector<std::string> unresolved_cells;
};

CrossResult run_cross_corpus(const ExperimentConfig& config);

// Sorted by dimension, modality, network, shift, then the remaining columns.
void sort_results(ResultsTable& table);

enum class ReportFormat { csv, markdown };

// Throws ConfigError for an empty table.
std::string render_report(const ResultsTable& table, ReportFormat format);
ResultsTable load_results_csv(const std::filesystem::path& path);
void save_results_csv(const ResultsTable& table, const std::filesystem::path& path);

// Runs fn(i) for i in [0, count) on up to `jobs` threads.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace gazeaffect
