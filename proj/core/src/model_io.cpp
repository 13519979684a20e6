#include "gazeaffect/model.hpp"

#include "csv.hpp"
#include "gazeaffect/error.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace gazeaffect {

namespace {

using nlohmann::json;
using Eigen::Index;
using Eigen::MatrixXd;

json row_major(const MatrixXd& m) {
    json out = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
    }
    return out;
}

MatrixXd from_row_major(const json& values, Index rows, Index cols, const std::string& where) {
    if (!values.is_array() || values.size() != static_cast<std::size_t>(rows * cols)) {
        throw DataError("model: " + where + " should hold " + std::to_string(rows * cols) + " values");
    }
    MatrixXd m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            const auto& v = values[static_cast<std::size_t>(i * cols + j)];
            if (!v.is_number()) {
                throw DataError("model: " + where + " contains a non-number");
            }
            m(i, j) = v.get<double>();
        }
    }
    return m;
}

json direction_json(const DirectionParams& d) {
    const Index u = static_cast<Index>(d.units());
    json out = json::object();
    for (std::size_t g = 0; g < kGateCount; ++g) {
        const Index r = static_cast<Index>(g) * u;
        out[std::string(to_string(static_cast<Gate>(g)))] = {
            {"W", row_major(d.input_weights.middleRows(r, u))},
            {"R", row_major(d.recurrent_weights.middleRows(r, u))},
            {"b", row_major(d.bias.middleRows(r, u))},
        };
    }
    return out;
}

DirectionParams direction_from_json(const json& j, Index units, Index in, const std::string& where) {
    DirectionParams d;
    d.input_weights.resize(4 * units, in);
    d.recurrent_weights.resize(4 * units, units);
    d.bias.resize(4 * units, 1);
    for (std::size_t g = 0; g < kGateCount; ++g) {
        const std::string name(to_string(static_cast<Gate>(g)));
        const std::string at = where + "." + name;
        if (!j.contains(name)) {
            throw DataError("model: missing " + at);
        }
        const auto& gate = j.at(name);
        const Index r = static_cast<Index>(g) * units;
        d.input_weights.middleRows(r, units) = from_row_major(gate.at("W"), units, in, at + ".W");
        d.recurrent_weights.middleRows(r, units) = from_row_major(gate.at("R"), units, units, at + ".R");
        d.bias.middleRows(r, units) = from_row_major(gate.at("b"), units, 1, at + ".b");
    }
    return d;
}

json spec_json(const NetworkSpec& spec) {
    json layers = json::array();
    for (const auto& l : spec.layers) {
        layers.push_back({{"kind", std::string(to_string(l.kind))}, {"size", l.size}});
    }
    return {{"input_dim", spec.input_dim}, {"output_dim", spec.output_dim}, {"layers", layers}};
}

}  // namespace

std::vector<double> predict_trace(const TrainedModel& model, const FeatureMatrix& features) {
    const auto normalized = apply_norm(features, model.norm_stats);
    const Eigen::VectorXd out = network_forward(model.params, model.spec, to_sequence(normalized));
    return apply_norm(std::span<const double>(out.data(), static_cast<std::size_t>(out.size())), model.norm_stats,
                      NormDirection::inverse_target);
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
    json weights;
    json layers = json::array();
    for (const auto& layer : model.params.layers) {
        json l = json::object();
        l["forward"] = direction_json(layer.directions.at(0));
        if (layer.directions.size() > 1) {
            l["backward"] = direction_json(layer.directions.at(1));
        }
        layers.push_back(std::move(l));
    }
    weights["layers"] = std::move(layers);
    weights["readout"] = {{"w", row_major(model.params.readout_weights)}, {"b", row_major(model.params.readout_bias)}};

    json history = json::array();
    for (const auto& h : model.history) {
        history.push_back({{"epoch", h.epoch}, {"train_sse", h.train_sse}, {"validation_sse", h.validation_sse}});
    }

    const auto& ns = model.norm_stats;
    json doc = {
        {"format_version", kModelFormatVersion},
        {"spec", spec_json(model.spec)},
        {"norm_stats",
         {{"names", ns.names},
          {"feature_means", ns.feature_means},
          {"feature_stds", ns.feature_stds},
          {"target_mean", ns.target_mean},
          {"target_std", ns.target_std}}},
        {"weights", weights},
        {"metadata",
         {{"dimension", std::string(to_string(model.dimension))},
          {"shift_frames", model.shift_used.frames},
          {"shift_fps", model.shift_used.source_fps.fps()},
          {"seed", model.metadata.seed},
          {"learning_rate", model.metadata.learning_rate},
          {"corpus", model.metadata.corpus},
          {"modality", model.metadata.modality},
          {"timestamp", model.metadata.timestamp},
          {"best_epoch", model.best_epoch},
          {"history", history}}},
    };
    csv::write_text(path, doc.dump(1) + "\n");
}

TrainedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open model " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("model " + path.string() + " is not valid JSON: " + e.what());
    }
    if (!doc.is_object() || !doc.contains("format_version")) {
        throw DataError("model " + path.string() + " has no format_version");
    }
    if (!doc["format_version"].is_number_integer() || doc["format_version"].get<int>() != kModelFormatVersion) {
        throw DataError("model format version " + doc["format_version"].dump() + " is not supported (expected " +
                        std::to_string(kModelFormatVersion) + ")");
    }
    try {
        TrainedModel model;
        const auto& s = doc.at("spec");
        model.spec.input_dim = s.at("input_dim").get<std::size_t>();
        model.spec.output_dim = s.at("output_dim").get<std::size_t>();
        for (const auto& l : s.at("layers")) {
            model.spec.layers.push_back({parse_layer_kind(l.at("kind").get<std::string>()), l.at("size").get<std::size_t>()});
        }
        model.spec.validate();

        const auto& ns = doc.at("norm_stats");
        model.norm_stats.names = ns.at("names").get<std::vector<std::string>>();
        model.norm_stats.feature_means = ns.at("feature_means").get<std::vector<double>>();
        model.norm_stats.feature_stds = ns.at("feature_stds").get<std::vector<double>>();
        model.norm_stats.target_mean = ns.at("target_mean").get<double>();
        model.norm_stats.target_std = ns.at("target_std").get<double>();
        if (model.norm_stats.names.size() != model.spec.input_dim ||
            model.norm_stats.feature_means.size() != model.spec.input_dim ||
            model.norm_stats.feature_stds.size() != model.spec.input_dim) {
            throw DataError("model: normalization statistics do not match input_dim");
        }

        const auto& w = doc.at("weights");
        const auto& layers = w.at("layers");
        if (layers.size() != model.spec.layers.size()) {
            throw DataError("model: weight layers do not match spec");
        }
        Index in = static_cast<Index>(model.spec.input_dim);
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const auto& ls = model.spec.layers[l];
            const auto units = static_cast<Index>(ls.units_per_direction());
            const std::string where = "weights.layers[" + std::to_string(l) + "]";
            LayerParams lp;
            lp.directions.push_back(direction_from_json(layers[l].at("forward"), units, in, where + ".forward"));
            if (ls.kind == LayerKind::blstm) {
                lp.directions.push_back(direction_from_json(layers[l].at("backward"), units, in, where + ".backward"));
            }
            model.params.layers.push_back(std::move(lp));
            in = static_cast<Index>(ls.size);
        }
        model.params.readout_weights = from_row_major(w.at("readout").at("w"), 1, in, "weights.readout.w");
        model.params.readout_bias = from_row_major(w.at("readout").at("b"), 1, 1, "weights.readout.b");

        const auto& m = doc.at("metadata");
        model.dimension = parse_dimension(m.at("dimension").get<std::string>());
        model.shift_used = {m.at("shift_frames").get<std::size_t>(), FrameRate(m.at("shift_fps").get<double>())};
        model.metadata.seed = m.at("seed").get<std::uint64_t>();
        model.metadata.learning_rate = m.at("learning_rate").get<double>();
        model.metadata.corpus = m.at("corpus").get<std::string>();
        model.metadata.modality = m.at("modality").get<std::string>();
        model.metadata.timestamp = m.at("timestamp").get<std::string>();
        model.best_epoch = m.at("best_epoch").get<int>();
        for (const auto& h : m.at("history")) {
            model.history.push_back(
                {h.at("epoch").get<int>(), h.at("train_sse").get<double>(), h.at("validation_sse").get<double>()});
        }
        return model;
    } catch (const json::exception& e) {
        throw DataError("model " + path.string() + " is malformed: " + e.what());
    } catch (const ConfigError& e) {
        throw DataError("model " + path.string() + " is malformed: " + e.what());
    }
}

}  // namespace gazeaffect
