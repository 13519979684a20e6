#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gazeaffect {

class FrameRate {
public:
    // Throws ConfigError unless fps is finite and positive.
    explicit FrameRate(double fps);

    double fps() const noexcept { return fps_; }
    double frame_ms() const noexcept { return 1000.0 / fps_; }

    friend bool operator==(FrameRate a, FrameRate b) noexcept { return a.fps_ == b.fps_; }

private:
    double fps_;
};

enum class Dimension { arousal, valence };
enum class Partition { train, validation, test };

std::string_view to_string(Dimension d) noexcept;
std::string_view to_string(Partition p) noexcept;
Dimension parse_dimension(std::string_view text);
Partition parse_partition(std::string_view text);

struct GazeFrame {
    std::int64_t index = 0;
    double h = 0.0;
    double v = 0.0;
    bool eye_closed = false;
    bool valid = true;
};

struct GazeLog {
    std::vector<GazeFrame> frames;
    FrameRate fps{25.0};

    // Frame indices run 0,1,2,...; valid frames carry finite coordinates.
    void validate() const;
};

// Frames x named features, stored row-major. Zero columns is allowed (an
// empty modality), zero rows is not.
class FeatureMatrix {
public:
    FeatureMatrix(std::vector<std::string> names, std::size_t rows,
                  std::vector<double> values, FrameRate fps);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return names_.size(); }
    FrameRate fps() const noexcept { return fps_; }
    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::vector<double>& values() const noexcept { return values_; }

    double operator()(std::size_t row, std::size_t col) const noexcept {
        return values_[row * names_.size() + col];
    }
    std::span<const double> row(std::size_t r) const noexcept {
        return {values_.data() + r * names_.size(), names_.size()};
    }
    std::vector<double> column(std::size_t c) const;

    friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

private:
    std::vector<std::string> names_;
    std::size_t rows_;
    std::vector<double> values_;
    FrameRate fps_;
};

class AnnotationTrace {
public:
    // Throws DataError naming the frame of the first value outside [-1, 1].
    AnnotationTrace(Dimension dimension, std::vector<double> values, FrameRate fps);

    Dimension dimension() const noexcept { return dimension_; }
    FrameRate fps() const noexcept { return fps_; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }

    friend bool operator==(const AnnotationTrace&, const AnnotationTrace&) = default;

private:
    Dimension dimension_;
    std::vector<double> values_;
    FrameRate fps_;
};

// Logical gaze columns -> CSV header names. `frame` is optional in the CSV.
struct GazeColumnMap {
    std::string h = "gaze_angle_x";
    std::string v = "gaze_angle_y";
    std::string closed = "AU45_c";
    std::string valid = "success";
    std::string frame = "frame";
};

// Parses "h=<col>,v=<col>,closed=<col>,valid=<col>[,frame=<col>]". Keys not
// given keep their defaults.
GazeColumnMap parse_gaze_column_map(std::string_view text);

struct RecordingEntry {
    std::string id;
    Partition partition = Partition::train;
    FrameRate fps{25.0};
    std::filesystem::path speech_features;
    std::filesystem::path gaze_log;
    std::map<Dimension, std::filesystem::path> annotations;
};

struct CorpusManifest {
    std::string corpus_name;
    std::vector<RecordingEntry> recordings;
    GazeColumnMap gaze_columns;

    std::vector<const RecordingEntry*> partition(Partition p) const;
    // Throws ConfigError when train, validation or test is empty.
    void require_all_partitions() const;
};

// Relative paths inside the manifest resolve against the manifest's directory.
CorpusManifest load_corpus_manifest(const std::filesystem::path& path);
void save_corpus_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);

FeatureMatrix load_feature_csv(const std::filesystem::path& path, FrameRate fps);
void save_feature_csv(const FeatureMatrix& matrix, const std::filesystem::path& path);

GazeLog load_gaze_log_csv(const std::filesystem::path& path, FrameRate fps,
                          const GazeColumnMap& columns = {});
void save_gaze_log_csv(const GazeLog& log, const std::filesystem::path& path,
                       const GazeColumnMap& columns = {});

// One value per frame: a bare column, or "frame,value" with an optional header.
// No range check, so it also reads predictions.
std::vector<double> load_trace_csv(const std::filesystem::path& path);
AnnotationTrace load_annotation_csv(const std::filesystem::path& path, Dimension dimension,
                                    FrameRate fps);
void save_annotation_csv(std::span<const double> values, const std::filesystem::path& path);

// round-half-away-from-zero(seconds * fps), at least 1.
std::size_t frames_for_duration(double seconds, FrameRate fps);

// Shortest decimal string that parses back to exactly `value`.
std::string format_decimal(double value);

}  // namespace gazeaffect
