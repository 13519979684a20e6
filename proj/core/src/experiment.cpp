#include "gazeaffect/experiment.hpp"

#include "csv.hpp"
#include "gazeaffect/error.hpp"
#include "gazeaffect/metrics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

namespace gazeaffect {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kArousalAnchor = 59;
constexpr std::size_t kValenceAnchor = 78;
constexpr double kAnchorFps = 25.0;

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (!known.contains(key)) {
            throw ConfigError("config: unknown key " + where + key);
        }
    }
}

template <typename T>
T get_as(const json& j, const std::string& where) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: " + where + " has the wrong type");
    }
}

std::size_t get_size(const json& j, const std::string& where) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
        throw ConfigError("config: " + where + " must be a non-negative integer");
    }
    return j.get<std::size_t>();
}

fs::path resolve(const fs::path& p, const fs::path& base) { return p.is_absolute() ? p : base / p; }

std::vector<double> concat_values(const std::vector<std::vector<double>>& parts) {
    std::vector<double> out;
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

// Normalized, frame-aligned training data for one (modality, shift).
struct PreparedSplit {
    NormStats stats;
    std::vector<LabeledSequence> train;
    std::vector<LabeledSequence> validation;
};

PreparedSplit prepare(const CorpusData& corpus, Modality modality, std::size_t shift) {
    const auto train = corpus.partition(Partition::train);
    const auto validation = corpus.partition(Partition::validation);
    if (train.empty() || validation.empty()) {
        throw ConfigError("corpus " + corpus.name + " needs train and validation recordings");
    }
    const ShiftSpec spec{shift, corpus.fps};
    std::vector<FeatureMatrix> train_x;
    std::vector<AnnotationTrace> train_y;
    for (const auto* r : train) {
        train_x.push_back(r->features(modality));
        train_y.push_back(shift_annotations(r->annotation, spec));
    }
    PreparedSplit out;
    out.stats = fit_norm_stats(train_x, train_y);
    for (std::size_t i = 0; i < train.size(); ++i) {
        out.train.push_back({to_sequence(apply_norm(train_x[i], out.stats)),
                             apply_norm(train_y[i].values(), out.stats, NormDirection::forward)});
    }
    for (const auto* r : validation) {
        const auto y = shift_annotations(r->annotation, spec);
        out.validation.push_back({to_sequence(apply_norm(r->features(modality), out.stats)),
                                  apply_norm(y.values(), out.stats, NormDirection::forward)});
    }
    return out;
}

std::vector<RunOutcome> execute_grid(const CorpusData& corpus, Dimension dimension,
                                     const std::vector<RunRequest>& requests, const ExperimentConfig& config) {
    std::vector<RunOutcome> outcomes(requests.size());
    parallel_for(requests.size(), config.jobs,
                 [&](std::size_t i) { outcomes[i] = execute_run(corpus, dimension, requests[i], config); });
    return outcomes;
}

std::vector<RunRequest> grid_for(Modality modality, const NetworkChoice& network, std::size_t shift,
                                 const ExperimentConfig& config) {
    std::vector<RunRequest> out;
    for (double lr : config.learning_rates) {
        for (std::uint64_t seed : config.seeds) {
            out.push_back({modality, network, shift, lr, seed});
        }
    }
    return out;
}

// Index of the lowest validation SSE among runs that did not diverge; the
// first in grid order wins ties.
std::optional<std::size_t> select_best(const std::vector<RunOutcome>& outcomes, std::size_t begin, std::size_t end) {
    std::optional<std::size_t> best;
    for (std::size_t i = begin; i < end; ++i) {
        if (!outcomes[i].model) continue;
        if (!best || outcomes[i].validation_sse < outcomes[*best].validation_sse) best = i;
    }
    return best;
}

ResultRow row_for(const RunOutcome& o, Dimension dimension, const std::string& corpus) {
    ResultRow row;
    row.dimension = dimension;
    row.modality = o.request.modality;
    row.network = o.request.network.kind;
    row.shift_frames = o.request.shift_frames;
    row.seed = o.request.seed;
    row.learning_rate = o.request.learning_rate;
    row.validation_ccc = o.validation_ccc;
    row.train_corpus = corpus;
    row.test_corpus = corpus;
    row.test_shift_frames = o.request.shift_frames;
    return row;
}

std::string cell_name(Dimension d, Modality m, const NetworkChoice& n, std::size_t shift) {
    return std::string(to_string(d)) + "/" + std::string(to_string(m)) + "/" + std::string(to_string(n.kind)) +
           "@" + std::to_string(shift);
}

CorpusData load_for(const fs::path& manifest_path, const ExperimentConfig& config) {
    const auto manifest = load_corpus_manifest(manifest_path);
    return load_corpus_data(manifest, config.dimension, config);
}

}  // namespace

std::string_view to_string(Modality m) noexcept {
    switch (m) {
        case Modality::speech: return "speech";
        case Modality::gaze: return "gaze";
        case Modality::fused: return "fused";
    }
    return "?";
}

Modality parse_modality(std::string_view text) {
    if (text == "speech") return Modality::speech;
    if (text == "gaze") return Modality::gaze;
    if (text == "fused") return Modality::fused;
    throw ConfigError("unknown modality '" + std::string(text) + "' (expected speech, gaze or fused)");
}

void ExperimentConfig::validate() const {
    if (modalities.empty()) throw ConfigError("config: modalities must not be empty");
    if (networks.empty()) throw ConfigError("config: networks must not be empty");
    if (learning_rates.empty()) throw ConfigError("config: learning_rates must not be empty");
    if (seeds.empty()) throw ConfigError("config: seeds must not be empty");
    if (!(arousal_window_seconds > 0.0) || !(valence_window_seconds > 0.0)) {
        throw ConfigError("config: window seconds must be positive");
    }
    if (!(sweep.range_seconds >= 0.0) || !std::isfinite(sweep.range_seconds)) {
        throw ConfigError("config: sweep range must be non-negative");
    }
    if (sweep.stride == 0) throw ConfigError("config: sweep stride must be at least 1");
    if (jobs == 0) throw ConfigError("config: jobs must be at least 1");
    for (const auto& n : networks) {
        static_cast<void>(NetworkSpec::stacked(n.kind, n.sizes, 1));
    }
    for (double lr : learning_rates) {
        TrainConfig t = training;
        t.learning_rate = lr;
        t.validate();
    }
    training.validate();
    gaze.grid.validate();
    if (!(gaze.dispersion_threshold > 0.0) || !(gaze.min_fixation_seconds > 0.0)) {
        throw ConfigError("config: fixation thresholds must be positive");
    }
}

double ExperimentConfig::window_seconds() const noexcept {
    return dimension == Dimension::arousal ? arousal_window_seconds : valence_window_seconds;
}

std::size_t ExperimentConfig::anchor_frames(FrameRate fps) const {
    if (sweep.anchor_frames) return *sweep.anchor_frames;
    const std::size_t anchor = dimension == Dimension::arousal ? kArousalAnchor : kValenceAnchor;
    return convert_shift({anchor, FrameRate(kAnchorFps)}, fps).frames;
}

std::vector<std::size_t> ExperimentConfig::sweep_shifts(FrameRate fps) const {
    const auto anchor = static_cast<long long>(anchor_frames(fps));
    const auto range = static_cast<long long>(sweep.range_seconds > 0.0 ? frames_for_duration(sweep.range_seconds, fps) : 0);
    const auto stride = static_cast<long long>(sweep.stride);
    std::vector<std::size_t> out;
    if (stride >= range) {
        out.push_back(static_cast<std::size_t>(anchor));
        return out;
    }
    for (long long j = -(range / stride); j <= range / stride; ++j) {
        const long long s = anchor + j * stride;
        if (s >= 0) out.push_back(static_cast<std::size_t>(s));
    }
    return out;
}

std::size_t ExperimentConfig::shift_for(LayerKind kind, FrameRate fps) const {
    if (auto it = shift_by_network.find(kind); it != shift_by_network.end()) return it->second;
    if (shift_frames) return *shift_frames;
    return anchor_frames(fps);
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config " + path.string() + " must be a JSON object");
    reject_unknown_keys(doc,
                        {"train_manifest", "test_manifest", "dimension", "modalities", "window_seconds", "sweep",
                         "shift_frames", "shift_by_network", "cross", "networks", "learning_rates", "seeds",
                         "training", "gaze", "output_dir", "jobs"},
                        "");
    const fs::path base = path.parent_path();
    ExperimentConfig c;
    if (doc.contains("train_manifest")) {
        c.train_manifest = resolve(get_as<std::string>(doc["train_manifest"], "train_manifest"), base);
    }
    if (doc.contains("test_manifest")) {
        c.test_manifest = resolve(get_as<std::string>(doc["test_manifest"], "test_manifest"), base);
    }
    if (doc.contains("dimension")) c.dimension = parse_dimension(get_as<std::string>(doc["dimension"], "dimension"));
    if (doc.contains("modalities")) {
        c.modalities.clear();
        for (const auto& m : doc["modalities"]) c.modalities.push_back(parse_modality(get_as<std::string>(m, "modalities")));
    }
    if (doc.contains("window_seconds")) {
        const auto& w = doc["window_seconds"];
        reject_unknown_keys(w, {"arousal", "valence"}, "window_seconds.");
        if (w.contains("arousal")) c.arousal_window_seconds = get_as<double>(w["arousal"], "window_seconds.arousal");
        if (w.contains("valence")) c.valence_window_seconds = get_as<double>(w["valence"], "window_seconds.valence");
    }
    if (doc.contains("sweep")) {
        const auto& s = doc["sweep"];
        reject_unknown_keys(s, {"anchor_frames", "range_seconds", "stride", "modality"}, "sweep.");
        if (s.contains("anchor_frames")) c.sweep.anchor_frames = get_size(s["anchor_frames"], "sweep.anchor_frames");
        if (s.contains("range_seconds")) c.sweep.range_seconds = get_as<double>(s["range_seconds"], "sweep.range_seconds");
        if (s.contains("stride")) c.sweep.stride = get_size(s["stride"], "sweep.stride");
        if (s.contains("modality")) c.sweep.modality = parse_modality(get_as<std::string>(s["modality"], "sweep.modality"));
    }
    if (doc.contains("shift_frames")) c.shift_frames = get_size(doc["shift_frames"], "shift_frames");
    if (doc.contains("shift_by_network")) {
        for (const auto& [k, v] : doc["shift_by_network"].items()) {
            c.shift_by_network[parse_layer_kind(k)] = get_size(v, "shift_by_network." + k);
        }
    }
    if (doc.contains("cross")) {
        const auto& x = doc["cross"];
        reject_unknown_keys(x, {"shift_override", "both_directions"}, "cross.");
        if (x.contains("shift_override")) c.cross_shift_override = get_size(x["shift_override"], "cross.shift_override");
        if (x.contains("both_directions")) c.cross_both_directions = get_as<bool>(x["both_directions"], "cross.both_directions");
    }
    if (doc.contains("networks")) {
        c.networks.clear();
        for (const auto& n : doc["networks"]) {
            reject_unknown_keys(n, {"kind", "sizes"}, "networks[].");
            NetworkChoice choice;
            choice.kind = parse_layer_kind(get_as<std::string>(n.at("kind"), "networks[].kind"));
            for (const auto& s : n.at("sizes")) choice.sizes.push_back(get_size(s, "networks[].sizes"));
            c.networks.push_back(std::move(choice));
        }
    }
    if (doc.contains("learning_rates")) {
        c.learning_rates = get_as<std::vector<double>>(doc["learning_rates"], "learning_rates");
    }
    if (doc.contains("seeds")) c.seeds = get_as<std::vector<std::uint64_t>>(doc["seeds"], "seeds");
    if (doc.contains("training")) {
        const auto& t = doc["training"];
        reject_unknown_keys(t, {"max_epochs", "patience_epochs", "noise_sigma", "batch_sequences", "momentum"},
                            "training.");
        if (t.contains("max_epochs")) c.training.max_epochs = get_as<int>(t["max_epochs"], "training.max_epochs");
        if (t.contains("patience_epochs")) {
            c.training.patience_epochs = get_as<int>(t["patience_epochs"], "training.patience_epochs");
        }
        if (t.contains("noise_sigma")) c.training.noise_sigma = get_as<double>(t["noise_sigma"], "training.noise_sigma");
        if (t.contains("batch_sequences")) {
            c.training.batch_sequences = get_size(t["batch_sequences"], "training.batch_sequences");
        }
        if (t.contains("momentum")) c.training.momentum = get_as<double>(t["momentum"], "training.momentum");
    }
    if (doc.contains("gaze")) {
        const auto& g = doc["gaze"];
        reject_unknown_keys(g, {"dispersion_threshold", "min_fixation_seconds", "grid"}, "gaze.");
        if (g.contains("dispersion_threshold")) {
            c.gaze.dispersion_threshold = get_as<double>(g["dispersion_threshold"], "gaze.dispersion_threshold");
        }
        if (g.contains("min_fixation_seconds")) {
            c.gaze.min_fixation_seconds = get_as<double>(g["min_fixation_seconds"], "gaze.min_fixation_seconds");
        }
        if (g.contains("grid")) {
            const auto& z = g["grid"];
            reject_unknown_keys(z, {"rows", "cols", "h_min", "h_max", "v_min", "v_max"}, "gaze.grid.");
            if (z.contains("rows")) c.gaze.grid.rows = get_size(z["rows"], "gaze.grid.rows");
            if (z.contains("cols")) c.gaze.grid.cols = get_size(z["cols"], "gaze.grid.cols");
            if (z.contains("h_min")) c.gaze.grid.h_min = get_as<double>(z["h_min"], "gaze.grid.h_min");
            if (z.contains("h_max")) c.gaze.grid.h_max = get_as<double>(z["h_max"], "gaze.grid.h_max");
            if (z.contains("v_min")) c.gaze.grid.v_min = get_as<double>(z["v_min"], "gaze.grid.v_min");
            if (z.contains("v_max")) c.gaze.grid.v_max = get_as<double>(z["v_max"], "gaze.grid.v_max");
        }
    }
    if (doc.contains("output_dir")) c.output_dir = resolve(get_as<std::string>(doc["output_dir"], "output_dir"), base);
    if (doc.contains("jobs")) c.jobs = get_size(doc["jobs"], "jobs");
    c.validate();
    return c;
}

void save_experiment_config(const ExperimentConfig& c, const fs::path& path) {
    json doc;
    doc["train_manifest"] = c.train_manifest.string();
    if (c.test_manifest) doc["test_manifest"] = c.test_manifest->string();
    doc["dimension"] = std::string(to_string(c.dimension));
    json mods = json::array();
    for (auto m : c.modalities) mods.push_back(std::string(to_string(m)));
    doc["modalities"] = mods;
    doc["window_seconds"] = {{"arousal", c.arousal_window_seconds}, {"valence", c.valence_window_seconds}};
    json sweep = {{"range_seconds", c.sweep.range_seconds},
                  {"stride", c.sweep.stride},
                  {"modality", std::string(to_string(c.sweep.modality))}};
    if (c.sweep.anchor_frames) sweep["anchor_frames"] = *c.sweep.anchor_frames;
    doc["sweep"] = sweep;
    if (c.shift_frames) doc["shift_frames"] = *c.shift_frames;
    if (!c.shift_by_network.empty()) {
        json by = json::object();
        for (const auto& [k, v] : c.shift_by_network) by[std::string(to_string(k))] = v;
        doc["shift_by_network"] = by;
    }
    json cross = {{"both_directions", c.cross_both_directions}};
    if (c.cross_shift_override) cross["shift_override"] = *c.cross_shift_override;
    doc["cross"] = cross;
    json nets = json::array();
    for (const auto& n : c.networks) nets.push_back({{"kind", std::string(to_string(n.kind))}, {"sizes", n.sizes}});
    doc["networks"] = nets;
    doc["learning_rates"] = c.learning_rates;
    doc["seeds"] = c.seeds;
    doc["training"] = {{"max_epochs", c.training.max_epochs},
                       {"patience_epochs", c.training.patience_epochs},
                       {"noise_sigma", c.training.noise_sigma},
                       {"batch_sequences", c.training.batch_sequences},
                       {"momentum", c.training.momentum}};
    doc["gaze"] = {{"dispersion_threshold", c.gaze.dispersion_threshold},
                   {"min_fixation_seconds", c.gaze.min_fixation_seconds},
                   {"grid",
                    {{"rows", c.gaze.grid.rows},
                     {"cols", c.gaze.grid.cols},
                     {"h_min", c.gaze.grid.h_min},
                     {"h_max", c.gaze.grid.h_max},
                     {"v_min", c.gaze.grid.v_min},
                     {"v_max", c.gaze.grid.v_max}}}};
    doc["output_dir"] = c.output_dir.string();
    doc["jobs"] = c.jobs;
    csv::write_text(path, doc.dump(2) + "\n");
}

FeatureMatrix RecordingData::features(Modality modality) const {
    switch (modality) {
        case Modality::speech: return speech;
        case Modality::gaze: return gaze;
        case Modality::fused: return fuse_features(speech, gaze, "gaze");
    }
    throw ConfigError("unknown modality");
}

std::vector<const RecordingData*> CorpusData::partition(Partition p) const {
    std::vector<const RecordingData*> out;
    for (const auto& r : recordings) {
        if (r.partition == p) out.push_back(&r);
    }
    return out;
}

CorpusData load_corpus_data(const CorpusManifest& manifest, Dimension dimension, const ExperimentConfig& config) {
    if (manifest.recordings.empty()) {
        throw DataError("corpus " + manifest.corpus_name + " has no recordings");
    }
    const FrameRate fps = manifest.recordings.front().fps;
    for (const auto& r : manifest.recordings) {
        if (!(r.fps == fps)) {
            throw DataError("corpus " + manifest.corpus_name + ": recording " + r.id + " has a different frame rate");
        }
        if (!r.annotations.contains(dimension)) {
            throw DataError("recording " + r.id + " has no " + std::string(to_string(dimension)) + " annotation");
        }
    }
    const WindowSpec window{dimension == Dimension::arousal ? config.arousal_window_seconds
                                                            : config.valence_window_seconds,
                            1};

    std::vector<std::optional<RecordingData>> loaded(manifest.recordings.size());
    std::vector<std::exception_ptr> errors(manifest.recordings.size());
    parallel_for(manifest.recordings.size(), config.jobs, [&](std::size_t i) {
        try {
            const auto& r = manifest.recordings[i];
            auto speech = load_feature_csv(r.speech_features, r.fps);
            const auto log = load_gaze_log_csv(r.gaze_log, r.fps, manifest.gaze_columns);
            auto gaze = extract_gaze_features(log, window, config.gaze);
            auto annotation = load_annotation_csv(r.annotations.at(dimension), dimension, r.fps);
            if (speech.rows() != gaze.rows() || speech.rows() != annotation.size()) {
                throw DataError("recording " + r.id + ": frame counts differ (speech " + std::to_string(speech.rows()) +
                                ", gaze " + std::to_string(gaze.rows()) + ", annotation " +
                                std::to_string(annotation.size()) + ")");
            }
            loaded[i].emplace(RecordingData{r.id, r.partition, std::move(speech), std::move(gaze), std::move(annotation)});
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    CorpusData corpus{manifest.corpus_name, fps, {}};
    for (auto& r : loaded) corpus.recordings.push_back(std::move(*r));
    const auto& names = corpus.recordings.front().speech.names();
    for (const auto& r : corpus.recordings) {
        if (r.speech.names() != names) {
            throw DataError("recording " + r.id + ": speech feature names differ from " + corpus.recordings.front().id);
        }
    }
    return corpus;
}

RunOutcome execute_run(const CorpusData& corpus, Dimension dimension, const RunRequest& request,
                       const ExperimentConfig& config) {
    RunOutcome out;
    out.request = request;
    const auto split = prepare(corpus, request.modality, request.shift_frames);
    const auto spec = NetworkSpec::stacked(request.network.kind, request.network.sizes, split.stats.names.size());
    TrainConfig tc = config.training;
    tc.learning_rate = request.learning_rate;
    tc.seed = request.seed;
    try {
        auto result = train_network(spec, split.train, split.validation, tc);
        TrainedModel model;
        model.spec = spec;
        model.params = std::move(result.params);
        model.norm_stats = split.stats;
        model.dimension = dimension;
        model.shift_used = {request.shift_frames, corpus.fps};
        model.history = std::move(result.history);
        model.best_epoch = result.best_epoch;
        model.metadata = {request.seed, request.learning_rate, corpus.name, std::string(to_string(request.modality)),
                          utc_timestamp()};
        out.validation_sse = result.best_validation_sse;
        out.validation_ccc = evaluate_partition(model, corpus, Partition::validation, request.modality,
                                                request.shift_frames);
        out.model = std::move(model);
    } catch (const DivergenceError& e) {
        out.validation_ccc = std::numeric_limits<double>::quiet_NaN();
        out.validation_sse = std::numeric_limits<double>::infinity();
        out.error = e.what();
    }
    return out;
}

double evaluate_partition(const TrainedModel& model, const CorpusData& corpus, Partition partition,
                          Modality modality, std::size_t shift_frames) {
    const auto recs = corpus.partition(partition);
    if (recs.empty()) {
        throw DataError("corpus " + corpus.name + " has no " + std::string(to_string(partition)) + " recordings");
    }
    std::vector<std::vector<double>> preds;
    std::vector<std::vector<double>> truth;
    for (const auto* r : recs) {
        preds.push_back(predict_trace(model, r->features(modality)));
        truth.push_back(shift_annotations(r->annotation, {shift_frames, corpus.fps}).values());
    }
    const auto x = concat_values(preds);
    const auto y = concat_values(truth);
    for (double v : x) {
        if (!std::isfinite(v)) return std::numeric_limits<double>::quiet_NaN();
    }
    return ccc(PredictionPair(x, y)).value;
}

SweepResult run_shift_sweep(const ExperimentConfig& config) {
    config.validate();
    const auto corpus = load_for(config.train_manifest, config);
    std::size_t shortest = std::numeric_limits<std::size_t>::max();
    for (const auto& r : corpus.recordings) shortest = std::min(shortest, r.annotation.size());

    std::vector<std::size_t> shifts;
    for (auto s : config.sweep_shifts(corpus.fps)) {
        if (s < shortest) shifts.push_back(s);
    }
    if (shifts.empty()) {
        throw ConfigError("every sweep shift is at least as long as the shortest recording");
    }

    struct Cell {
        const NetworkChoice* network;
        std::size_t shift;
        std::size_t begin;
        std::size_t end;
    };
    std::vector<RunRequest> requests;
    std::vector<Cell> cells;
    for (const auto& n : config.networks) {
        for (auto s : shifts) {
            const auto grid = grid_for(config.sweep.modality, n, s, config);
            cells.push_back({&n, s, requests.size(), requests.size() + grid.size()});
            requests.insert(requests.end(), grid.begin(), grid.end());
        }
    }
    const auto outcomes = execute_grid(corpus, config.dimension, requests, config);

    SweepResult result;
    for (const auto& o : outcomes) result.table.rows.push_back(row_for(o, config.dimension, corpus.name));
    for (const auto& cell : cells) {
        const auto best = select_best(outcomes, cell.begin, cell.end);
        if (!best) continue;
        result.table.rows[*best].selected = true;
        const auto kind = cell.network->kind;
        const double score = outcomes[*best].validation_ccc;
        // Shifts are visited in increasing order, so ties keep the smaller one.
        if (!result.best_ccc.contains(kind) || score > result.best_ccc[kind]) {
            result.best_ccc[kind] = score;
            result.best_shift[kind] = cell.shift;
        }
    }
    return result;
}

void save_sweep_best(const SweepResult& result, Dimension dimension, const fs::path& path) {
    json shifts = json::object();
    json cccs = json::object();
    for (const auto& [kind, s] : result.best_shift) shifts[std::string(to_string(kind))] = s;
    for (const auto& [kind, c] : result.best_ccc) cccs[std::string(to_string(kind))] = c;
    const json doc = {{"dimension", std::string(to_string(dimension))}, {"best_shift", shifts}, {"best_ccc", cccs}};
    csv::write_text(path, doc.dump(2) + "\n");
}

std::map<LayerKind, std::size_t> load_sweep_best(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::map<LayerKind, std::size_t> out;
    try {
        const auto doc = json::parse(in);
        for (const auto& [k, v] : doc.at("best_shift").items()) {
            out[parse_layer_kind(k)] = v.get<std::size_t>();
        }
    } catch (const json::exception& e) {
        throw DataError(path.string() + " is malformed: " + e.what());
    } catch (const ConfigError& e) {
        throw DataError(path.string() + " is malformed: " + e.what());
    }
    return out;
}

IntraResult run_intra_corpus(const ExperimentConfig& config) {
    config.validate();
    const auto corpus = load_for(config.train_manifest, config);
    const bool has_test = !corpus.partition(Partition::test).empty();

    struct Cell {
        Modality modality;
        const NetworkChoice* network;
        std::size_t shift;
        std::size_t begin;
        std::size_t end;
    };
    std::vector<RunRequest> requests;
    std::vector<Cell> cells;
    for (auto m : config.modalities) {
        for (const auto& n : config.networks) {
            const auto s = config.shift_for(n.kind, corpus.fps);
            const auto grid = grid_for(m, n, s, config);
            cells.push_back({m, &n, s, requests.size(), requests.size() + grid.size()});
            requests.insert(requests.end(), grid.begin(), grid.end());
        }
    }
    const auto outcomes = execute_grid(corpus, config.dimension, requests, config);

    IntraResult result;
    for (const auto& o : outcomes) result.table.rows.push_back(row_for(o, config.dimension, corpus.name));
    std::map<LayerKind, std::map<Modality, double>> selected_ccc;
    for (const auto& cell : cells) {
        const auto best = select_best(outcomes, cell.begin, cell.end);
        if (!best) {
            result.unresolved_cells.push_back(cell_name(config.dimension, cell.modality, *cell.network, cell.shift));
            continue;
        }
        auto& row = result.table.rows[*best];
        row.selected = true;
        const auto& model = *outcomes[*best].model;
        if (has_test) {
            row.test_ccc = evaluate_partition(model, corpus, Partition::test, cell.modality, cell.shift);
        }
        result.selected_models.push_back(model);
        selected_ccc[cell.network->kind][cell.modality] = row.validation_ccc;
    }
    for (const auto& [kind, by_modality] : selected_ccc) {
        const auto fused = by_modality.find(Modality::fused);
        if (fused == by_modality.end()) continue;
        std::optional<double> best_unimodal;
        for (auto m : {Modality::speech, Modality::gaze}) {
            if (auto it = by_modality.find(m); it != by_modality.end()) {
                if (!best_unimodal || it->second > *best_unimodal) best_unimodal = it->second;
            }
        }
        if (best_unimodal && *best_unimodal != 0.0) {
            result.fused_improvement[kind] = relative_improvement(fused->second, *best_unimodal);
        }
    }
    return result;
}

CrossResult run_cross_corpus(const ExperimentConfig& config) {
    config.validate();
    if (!config.test_manifest) {
        throw ConfigError("cross-corpus evaluation needs test_manifest");
    }
    const auto a = load_for(config.train_manifest, config);
    const auto b = load_for(*config.test_manifest, config);
    if (a.recordings.front().speech.names() != b.recordings.front().speech.names()) {
        throw DataError("speech feature names differ between corpora " + a.name + " and " + b.name);
    }

    struct Direction {
        const CorpusData* train;
        const CorpusData* test;
        bool forward;
    };
    std::vector<Direction> directions{{&a, &b, true}};
    if (config.cross_both_directions) directions.push_back({&b, &a, false});

    CrossResult result;
    for (const auto& dir : directions) {
        if (dir.test->partition(Partition::test).empty()) {
            throw DataError("corpus " + dir.test->name + " has no test recordings");
        }
        struct Cell {
            Modality modality;
            const NetworkChoice* network;
            std::size_t train_shift;
            std::size_t test_shift;
            std::size_t begin;
            std::size_t end;
        };
        std::vector<RunRequest> requests;
        std::vector<Cell> cells;
        for (auto m : config.modalities) {
            for (const auto& n : config.networks) {
                const auto shift_a = config.shift_for(n.kind, a.fps);
                const auto shift_b = convert_shift({shift_a, a.fps}, b.fps, config.cross_shift_override).frames;
                const auto train_shift = dir.forward ? shift_a : shift_b;
                const auto test_shift = dir.forward ? shift_b : shift_a;
                const auto grid = grid_for(m, n, train_shift, config);
                cells.push_back({m, &n, train_shift, test_shift, requests.size(), requests.size() + grid.size()});
                requests.insert(requests.end(), grid.begin(), grid.end());
            }
        }
        const auto outcomes = execute_grid(*dir.train, config.dimension, requests, config);
        const std::size_t offset = result.table.rows.size();
        for (const auto& o : outcomes) {
            auto row = row_for(o, config.dimension, dir.train->name);
            row.test_corpus = dir.test->name;
            result.table.rows.push_back(std::move(row));
        }
        for (const auto& cell : cells) {
            for (std::size_t i = cell.begin; i < cell.end; ++i) {
                result.table.rows[offset + i].test_shift_frames = cell.test_shift;
            }
            const auto best = select_best(outcomes, cell.begin, cell.end);
            if (!best) {
                result.unresolved_cells.push_back(dir.train->name + "->" + dir.test->name + ":" +
                                                  cell_name(config.dimension, cell.modality, *cell.network,
                                                            cell.train_shift));
                continue;
            }
            auto& row = result.table.rows[offset + *best];
            row.selected = true;
            row.test_ccc = evaluate_partition(*outcomes[*best].model, *dir.test, Partition::test, cell.modality,
                                              cell.test_shift);
        }
    }
    return result;
}

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min(std::max<std::size_t>(jobs, 1), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace gazeaffect
