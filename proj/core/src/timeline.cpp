#include "gazeaffect/timeline.hpp"

#include "csv.hpp"
#include "gazeaffect/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

namespace gazeaffect {

namespace fs = std::filesystem;
using nlohmann::json;

FrameRate::FrameRate(double fps) : fps_(fps) {
    if (!std::isfinite(fps) || fps <= 0.0) {
        throw ConfigError("frame rate must be positive, got " + format_decimal(fps));
    }
}

std::string_view to_string(Dimension d) noexcept {
    return d == Dimension::arousal ? "arousal" : "valence";
}

std::string_view to_string(Partition p) noexcept {
    switch (p) {
        case Partition::train: return "train";
        case Partition::validation: return "validation";
        case Partition::test: return "test";
    }
    return "?";
}

Dimension parse_dimension(std::string_view text) {
    if (text == "arousal") return Dimension::arousal;
    if (text == "valence") return Dimension::valence;
    throw ConfigError("unknown dimension '" + std::string(text) + "' (expected arousal|valence)");
}

Partition parse_partition(std::string_view text) {
    if (text == "train") return Partition::train;
    if (text == "validation" || text == "val" || text == "devel") return Partition::validation;
    if (text == "test") return Partition::test;
    throw ConfigError("unknown partition '" + std::string(text) + "'");
}

void GazeLog::validate() const {
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto& f = frames[i];
        if (f.index != static_cast<std::int64_t>(i)) {
            throw DataError("gaze log frame index " + std::to_string(f.index) + " at position " +
                            std::to_string(i) + " (expected " + std::to_string(i) + ")");
        }
        if (f.valid && (!std::isfinite(f.h) || !std::isfinite(f.v))) {
            throw DataError("gaze log frame " + std::to_string(i) + " is valid but not finite");
        }
    }
}

FeatureMatrix::FeatureMatrix(std::vector<std::string> names, std::size_t rows,
                             std::vector<double> values, FrameRate fps)
    : names_(std::move(names)), rows_(rows), values_(std::move(values)), fps_(fps) {
    if (rows_ == 0) {
        throw DataError("feature matrix has no frames");
    }
    if (values_.size() != rows_ * names_.size()) {
        throw DataError("feature matrix holds " + std::to_string(values_.size()) + " values, expected " +
                        std::to_string(rows_) + "x" + std::to_string(names_.size()));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw DataError("non-finite feature value at row " + std::to_string(i / names_.size()) +
                            ", column " + std::to_string(i % names_.size()));
        }
    }
}

std::vector<double> FeatureMatrix::column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        out[r] = (*this)(r, c);
    }
    return out;
}

AnnotationTrace::AnnotationTrace(Dimension dimension, std::vector<double> values, FrameRate fps)
    : dimension_(dimension), values_(std::move(values)), fps_(fps) {
    if (values_.empty()) {
        throw DataError("annotation trace is empty");
    }
    for (std::size_t t = 0; t < values_.size(); ++t) {
        const double v = values_[t];
        if (!std::isfinite(v) || v < -1.0 || v > 1.0) {
            throw DataError("annotation value " + format_decimal(v) + " at frame " + std::to_string(t) +
                            " outside [-1, 1]");
        }
    }
}

GazeColumnMap parse_gaze_column_map(std::string_view text) {
    GazeColumnMap map;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        auto item = text.substr(start, comma == std::string_view::npos ? text.npos : comma - start);
        while (!item.empty() && std::isspace(static_cast<unsigned char>(item.front()))) item.remove_prefix(1);
        while (!item.empty() && std::isspace(static_cast<unsigned char>(item.back()))) item.remove_suffix(1);
        if (!item.empty()) {
            const auto eq = item.find('=');
            if (eq == std::string_view::npos || eq == 0 || eq + 1 == item.size()) {
                throw ConfigError("bad gaze column mapping '" + std::string(item) + "' (expected key=column)");
            }
            const auto key = item.substr(0, eq);
            std::string value(item.substr(eq + 1));
            if (key == "h") map.h = value;
            else if (key == "v") map.v = value;
            else if (key == "closed" || key == "eye_closed") map.closed = value;
            else if (key == "valid") map.valid = value;
            else if (key == "frame") map.frame = value;
            else throw ConfigError("unknown gaze column key '" + std::string(key) + "'");
        }
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return map;
}

std::vector<const RecordingEntry*> CorpusManifest::partition(Partition p) const {
    std::vector<const RecordingEntry*> out;
    for (const auto& r : recordings) {
        if (r.partition == p) {
            out.push_back(&r);
        }
    }
    return out;
}

void CorpusManifest::require_all_partitions() const {
    for (auto p : {Partition::train, Partition::validation, Partition::test}) {
        if (partition(p).empty()) {
            throw ConfigError("corpus '" + corpus_name + "' has no " + std::string(to_string(p)) +
                              " recordings");
        }
    }
}

namespace {

const json& require_field(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) {
        throw DataError("manifest: missing field " + where + "." + key);
    }
    return obj.at(key);
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
    const auto& v = require_field(obj, key, where);
    if (!v.is_string()) {
        throw DataError("manifest: field " + where + "." + key + " must be a string");
    }
    return v.get<std::string>();
}

fs::path resolve_existing(const fs::path& base, const std::string& raw, const std::string& field) {
    fs::path p(raw);
    if (p.is_relative()) {
        p = base / p;
    }
    if (!fs::exists(p)) {
        throw DataError("manifest: " + field + " references missing file " + p.string());
    }
    return p;
}

}  // namespace

CorpusManifest load_corpus_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("manifest not found: " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("manifest " + path.string() + " is not valid JSON: " + e.what());
    }
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");

    CorpusManifest manifest;
    manifest.corpus_name = require_string(doc, "corpus", "");
    if (doc.contains("gaze_columns")) {
        const auto& gc = doc.at("gaze_columns");
        if (!gc.is_object()) {
            throw DataError("manifest: field .gaze_columns must be an object");
        }
        auto read = [&](const char* key, std::string& dst) {
            if (gc.contains(key)) dst = require_string(gc, key, ".gaze_columns");
        };
        read("h", manifest.gaze_columns.h);
        read("v", manifest.gaze_columns.v);
        read("closed", manifest.gaze_columns.closed);
        read("valid", manifest.gaze_columns.valid);
        read("frame", manifest.gaze_columns.frame);
    }
    const auto& recs = require_field(doc, "recordings", "");
    if (!recs.is_array()) {
        throw DataError("manifest: field .recordings must be an array");
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto& r = recs[i];
        const std::string where = ".recordings[" + std::to_string(i) + "]";
        RecordingEntry entry;
        entry.id = require_string(r, "id", where);
        if (!seen.insert(entry.id).second) {
            throw DataError("manifest: duplicate recording id \"" + entry.id + "\"");
        }
        try {
            entry.partition = parse_partition(require_string(r, "partition", where));
            const auto& fps = require_field(r, "fps", where);
            if (!fps.is_number()) {
                throw DataError("manifest: field " + where + ".fps must be a number");
            }
            entry.fps = FrameRate(fps.get<double>());
        } catch (const ConfigError& e) {
            throw DataError("manifest: " + where + ": " + e.what());
        }
        entry.speech_features = resolve_existing(base, require_string(r, "speech", where), where + ".speech");
        entry.gaze_log = resolve_existing(base, require_string(r, "gaze", where), where + ".gaze");
        const auto& ann = require_field(r, "annotations", where);
        if (!ann.is_object() || ann.empty()) {
            throw DataError("manifest: field " + where + ".annotations must be a non-empty object");
        }
        for (const auto& [key, value] : ann.items()) {
            Dimension dim;
            try {
                dim = parse_dimension(key);
            } catch (const ConfigError&) {
                throw DataError("manifest: " + where + ".annotations has unknown dimension '" + key + "'");
            }
            if (!value.is_string()) {
                throw DataError("manifest: field " + where + ".annotations." + key + " must be a string");
            }
            entry.annotations[dim] =
                resolve_existing(base, value.get<std::string>(), where + ".annotations." + key);
        }
        manifest.recordings.push_back(std::move(entry));
    }
    return manifest;
}

void save_corpus_manifest(const CorpusManifest& manifest, const fs::path& path) {
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    auto rel = [&](const fs::path& p) {
        return p.is_absolute() ? fs::relative(p, fs::absolute(base)).generic_string() : p.generic_string();
    };
    json doc;
    doc["corpus"] = manifest.corpus_name;
    doc["gaze_columns"] = {{"h", manifest.gaze_columns.h},
                           {"v", manifest.gaze_columns.v},
                           {"closed", manifest.gaze_columns.closed},
                           {"valid", manifest.gaze_columns.valid},
                           {"frame", manifest.gaze_columns.frame}};
    json recs = json::array();
    for (const auto& r : manifest.recordings) {
        json ann = json::object();
        for (const auto& [dim, p] : r.annotations) {
            ann[std::string(to_string(dim))] = rel(p);
        }
        recs.push_back({{"id", r.id},
                        {"partition", std::string(to_string(r.partition))},
                        {"fps", r.fps.fps()},
                        {"speech", rel(r.speech_features)},
                        {"gaze", rel(r.gaze_log)},
                        {"annotations", ann}});
    }
    doc["recordings"] = std::move(recs);
    csv::write_text(path, doc.dump(2) + "\n");
}

FeatureMatrix load_feature_csv(const fs::path& path, FrameRate fps) {
    const auto table = csv::read(path);
    if (table.rows.empty()) {
        throw DataError(path.string() + ": empty file");
    }
    const auto& header = table.rows.front().cells;
    if (table.rows.size() == 1) {
        throw DataError(path.string() + ": no frames");
    }
    const std::size_t cols = header.size();
    std::vector<double> values;
    values.reserve((table.rows.size() - 1) * cols);
    for (std::size_t r = 1; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.cells.size() != cols) {
            throw DataError(path.string() + ": ragged row at data row " + std::to_string(r - 1) + " (line " +
                            std::to_string(row.line) + "): " + std::to_string(row.cells.size()) +
                            " cells, header has " + std::to_string(cols));
        }
        for (std::size_t c = 0; c < cols; ++c) {
            const auto v = csv::parse_number(row.cells[c]);
            if (!v) {
                throw DataError(path.string() + ": non-numeric cell '" + row.cells[c] + "' at row " +
                                std::to_string(r - 1) + ", column " + std::to_string(c));
            }
            values.push_back(*v);
        }
    }
    return FeatureMatrix(header, table.rows.size() - 1, std::move(values), fps);
}

void save_feature_csv(const FeatureMatrix& matrix, const fs::path& path) {
    std::string out = csv::join(matrix.names());
    out += '\n';
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        const auto row = matrix.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            out += format_decimal(row[c]);
        }
        out += '\n';
    }
    csv::write_text(path, out);
}

GazeLog load_gaze_log_csv(const fs::path& path, FrameRate fps, const GazeColumnMap& columns) {
    const auto table = csv::read(path);
    if (table.rows.size() < 2) {
        throw DataError(path.string() + ": no frames");
    }
    const auto& header = table.rows.front().cells;
    auto find = [&](const std::string& name) -> std::optional<std::size_t> {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) return std::nullopt;
        return static_cast<std::size_t>(it - header.begin());
    };
    auto require = [&](const std::string& name, const char* logical) {
        const auto idx = find(name);
        if (!idx) {
            throw DataError(path.string() + ": gaze column '" + name + "' for " + logical + " not found");
        }
        return *idx;
    };
    const auto col_h = require(columns.h, "h");
    const auto col_v = require(columns.v, "v");
    const auto col_closed = require(columns.closed, "eye_closed");
    const auto col_valid = require(columns.valid, "valid");
    const auto col_frame = columns.frame.empty() ? std::nullopt : find(columns.frame);

    GazeLog log;
    log.fps = fps;
    log.frames.reserve(table.rows.size() - 1);
    for (std::size_t r = 1; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::size_t expected = r - 1;
        if (row.cells.size() != header.size()) {
            throw DataError(path.string() + ": ragged row at line " + std::to_string(row.line));
        }
        auto number = [&](std::size_t c) {
            const auto v = csv::parse_number(row.cells[c]);
            if (!v) {
                throw DataError(path.string() + ": non-numeric cell '" + row.cells[c] + "' at row " +
                                std::to_string(expected) + ", column " + std::to_string(c));
            }
            return *v;
        };
        GazeFrame f;
        f.index = static_cast<std::int64_t>(expected);
        if (col_frame) {
            const double idx = number(*col_frame);
            if (idx != static_cast<double>(expected)) {
                throw DataError(path.string() + ": non-contiguous frame index " + format_decimal(idx) +
                                " where frame " + std::to_string(expected) + " expected");
            }
        }
        f.valid = number(col_valid) != 0.0;
        f.eye_closed = number(col_closed) != 0.0;
        // Coordinates of invalid frames are irrelevant and may be garbage.
        const auto h = csv::parse_number(row.cells[col_h]);
        const auto v = csv::parse_number(row.cells[col_v]);
        if (f.valid) {
            if (!h || !v) {
                throw DataError(path.string() + ": valid frame " + std::to_string(expected) +
                                " has non-numeric gaze coordinates");
            }
        }
        f.h = h.value_or(0.0);
        f.v = v.value_or(0.0);
        log.frames.push_back(f);
    }
    return log;
}

void save_gaze_log_csv(const GazeLog& log, const fs::path& path, const GazeColumnMap& columns) {
    std::string out = csv::join({columns.frame.empty() ? std::string("frame") : columns.frame, columns.h,
                                 columns.v, columns.closed, columns.valid});
    out += '\n';
    for (const auto& f : log.frames) {
        out += std::to_string(f.index);
        out += ',';
        out += format_decimal(f.h);
        out += ',';
        out += format_decimal(f.v);
        out += f.eye_closed ? ",1" : ",0";
        out += f.valid ? ",1\n" : ",0\n";
    }
    csv::write_text(path, out);
}

std::vector<double> load_trace_csv(const fs::path& path) {
    const auto table = csv::read(path);
    if (table.rows.empty()) {
        throw DataError(path.string() + ": empty annotation file");
    }
    std::size_t first = 0;
    std::size_t value_col = 0;
    std::optional<std::size_t> frame_col;
    const auto& head = table.rows.front().cells;
    const bool has_header = std::any_of(head.begin(), head.end(),
                                        [](const std::string& c) { return !csv::parse_number(c); });
    if (has_header) {
        first = 1;
        const auto it = std::find(head.begin(), head.end(), "value");
        if (it != head.end()) {
            value_col = static_cast<std::size_t>(it - head.begin());
        } else if (head.size() == 1) {
            value_col = 0;
        } else {
            value_col = 1;
        }
        const auto fit = std::find(head.begin(), head.end(), "frame");
        if (fit != head.end()) {
            frame_col = static_cast<std::size_t>(fit - head.begin());
        }
    } else if (head.size() == 2) {
        value_col = 1;
        frame_col = 0;
    }
    if (table.rows.size() <= first) {
        throw DataError(path.string() + ": no annotation frames");
    }
    std::vector<double> values;
    values.reserve(table.rows.size() - first);
    for (std::size_t r = first; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::size_t frame = r - first;
        if (row.cells.size() <= value_col) {
            throw DataError(path.string() + ": missing value at frame " + std::to_string(frame));
        }
        const auto v = csv::parse_number(row.cells[value_col]);
        if (!v) {
            throw DataError(path.string() + ": non-numeric annotation '" + row.cells[value_col] + "' at frame " +
                            std::to_string(frame));
        }
        if (frame_col) {
            const auto idx = csv::parse_number(row.cells[*frame_col]);
            if (!idx || *idx != static_cast<double>(frame)) {
                throw DataError(path.string() + ": non-contiguous frame index at frame " + std::to_string(frame));
            }
        }
        values.push_back(*v);
    }
    return values;
}

AnnotationTrace load_annotation_csv(const fs::path& path, Dimension dimension, FrameRate fps) {
    auto values = load_trace_csv(path);
    for (std::size_t t = 0; t < values.size(); ++t) {
        if (values[t] < -1.0 || values[t] > 1.0) {
            throw DataError(path.string() + ": annotation value " + format_decimal(values[t]) + " at frame " +
                            std::to_string(t) + " outside [-1, 1]");
        }
    }
    return AnnotationTrace(dimension, std::move(values), fps);
}

void save_annotation_csv(std::span<const double> values, const fs::path& path) {
    std::string out = "frame,value\n";
    for (std::size_t t = 0; t < values.size(); ++t) {
        out += std::to_string(t);
        out += ',';
        out += format_decimal(values[t]);
        out += '\n';
    }
    csv::write_text(path, out);
}

std::size_t frames_for_duration(double seconds, FrameRate fps) {
    if (!std::isfinite(seconds) || seconds <= 0.0) {
        throw ConfigError("duration must be positive, got " + format_decimal(seconds));
    }
    const double frames = std::round(seconds * fps.fps());  // std::round is half-away-from-zero
    return std::max<std::size_t>(1, static_cast<std::size_t>(frames));
}

std::string format_decimal(double value) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) {
        return "nan";
    }
    return std::string(buf.data(), ptr);
}

}  // namespace gazeaffect
