#include "gazeaffect/error.hpp"
#include "gazeaffect/experiment.hpp"
#include "gazeaffect/fusion.hpp"
#include "gazeaffect/gaze_features.hpp"
#include "gazeaffect/metrics.hpp"
#include "gazeaffect/model.hpp"
#include "gazeaffect/synthetic.hpp"
#include "gazeaffect/timeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace gazeaffect;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kDivergence = 3 };

struct GlobalOptions {
    std::string config;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
};

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("failed writing " + path.string());
}

ExperimentConfig experiment_config(const GlobalOptions& g) {
    if (g.config.empty()) throw ConfigError("--config is required");
    auto c = load_experiment_config(g.config);
    if (!g.out_dir.empty()) c.output_dir = g.out_dir;
    if (g.seed) c.seeds = {*g.seed};
    if (g.jobs) c.jobs = *g.jobs;
    c.validate();
    return c;
}

std::string model_file_name(const TrainedModel& m) {
    std::string kind(to_string(m.spec.kind()));
    return std::string(to_string(m.dimension)) + "_" + m.metadata.modality + "_" + kind + ".json";
}

int report_unresolved(const std::vector<std::string>& cells) {
    if (cells.empty()) return kOk;
    for (const auto& c : cells) std::cerr << "error: every run diverged in cell " << c << "\n";
    return kDivergence;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bimodal speech and eye-gaze continuous affect prediction"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--config", g.config, "Experiment config JSON");
    app.add_option("--out-dir", g.out_dir, "Output directory");
    app.add_option("--seed", g.seed, "Seed override");
    app.add_option("--jobs", g.jobs, "Parallel training runs")->check(CLI::PositiveNumber);

    // extract-gaze
    auto* extract = app.add_subcommand("extract-gaze", "Windowed gaze functionals from a gaze log CSV");
    std::string ex_in, ex_out, ex_columns;
    double ex_fps = 25.0, ex_window = 4.0;
    std::size_t ex_step = 1;
    extract->add_option("--in", ex_in, "Gaze log CSV")->required();
    extract->add_option("--fps", ex_fps, "Frame rate")->required();
    extract->add_option("--window-seconds", ex_window, "Window length in seconds")->required();
    extract->add_option("--gaze-columns", ex_columns, "h=..,v=..,closed=..,valid=..");
    extract->add_option("--step-frames", ex_step, "Recompute every n frames")->check(CLI::PositiveNumber);
    extract->add_option("--out", ex_out, "Feature CSV")->required();

    // fuse
    auto* fuse = app.add_subcommand("fuse", "Concatenate speech and gaze feature CSVs frame by frame");
    std::string fu_speech, fu_gaze, fu_out;
    double fu_fps = 25.0;
    fuse->add_option("--speech", fu_speech, "Speech feature CSV")->required();
    fuse->add_option("--gaze", fu_gaze, "Gaze feature CSV")->required();
    fuse->add_option("--fps", fu_fps, "Frame rate of both inputs");
    fuse->add_option("--out", fu_out, "Fused feature CSV")->required();

    // shift
    auto* shift = app.add_subcommand("shift", "Shift annotations back in time");
    std::string sh_in, sh_out;
    std::size_t sh_frames = 0;
    double sh_fps = 25.0;
    shift->add_option("--annotations", sh_in, "Annotation CSV")->required();
    shift->add_option("--frames", sh_frames, "Shift in frames")->required();
    shift->add_option("--fps", sh_fps, "Frame rate");
    shift->add_option("--out", sh_out, "Shifted annotation CSV")->required();

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Score a prediction trace against ground truth");
    std::string ev_pred, ev_truth, ev_metric = "ccc";
    evaluate->add_option("--pred", ev_pred, "Prediction CSV")->required();
    evaluate->add_option("--truth", ev_truth, "Ground truth CSV")->required();
    evaluate->add_option("--metric", ev_metric, "ccc, pearson or sse")
        ->check(CLI::IsMember({"ccc", "pearson", "sse"}));

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
    SyntheticCorpusSpec sy;
    synth->add_option("--name", sy.corpus_name, "Corpus name");
    synth->add_option("--train", sy.train_recordings, "Training recordings");
    synth->add_option("--validation", sy.validation_recordings, "Validation recordings");
    synth->add_option("--test", sy.test_recordings, "Test recordings");
    synth->add_option("--frames", sy.frames, "Frames per recording");
    synth->add_option("--fps", sy.fps, "Frame rate");
    synth->add_option("--lag", sy.lag_frames, "Annotator lag in frames");
    synth->add_option("--noise", sy.noise_level, "Annotation noise std");
    synth->add_option("--speech-features", sy.speech_features, "Speech feature count");
    synth->add_option("--speech-weight", sy.speech_weight, "Speech latent weight in arousal");
    synth->add_option("--gaze-weight", sy.gaze_weight, "Gaze latent weight in arousal");

    // sweep / train / cross-eval
    auto* sweep = app.add_subcommand("sweep", "Ground-truth shift sweep on the validation partition");
    auto* train = app.add_subcommand("train", "Unimodal and fused training at the chosen shift");
    std::string tr_shift_from;
    train->add_option("--shift-from", tr_shift_from, "sweep_best.json with the shift per network");
    auto* cross = app.add_subcommand("cross-eval", "Train on one corpus, test on another");
    std::string cr_shift_from;
    cross->add_option("--shift-from", cr_shift_from, "sweep_best.json with the shift per network");

    // report
    auto* report = app.add_subcommand("report", "Render a results CSV");
    std::vector<std::string> rp_results;
    std::string rp_format = "markdown", rp_out;
    report->add_option("--results", rp_results, "Results CSV (repeatable)")->required();
    report->add_option("--format", rp_format, "csv or markdown")->check(CLI::IsMember({"csv", "markdown"}));
    report->add_option("--out", rp_out, "Output file (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*extract) {
            const FrameRate fps(ex_fps);
            const auto columns = ex_columns.empty() ? GazeColumnMap{} : parse_gaze_column_map(ex_columns);
            GazeFeatureConfig cfg;
            if (!g.config.empty()) cfg = load_experiment_config(g.config).gaze;
            const auto log = load_gaze_log_csv(ex_in, fps, columns);
            save_feature_csv(extract_gaze_features(log, WindowSpec{ex_window, ex_step}, cfg), ex_out);
        } else if (*fuse) {
            const FrameRate fps(fu_fps);
            save_feature_csv(fuse_features(load_feature_csv(fu_speech, fps), load_feature_csv(fu_gaze, fps)), fu_out);
        } else if (*shift) {
            const FrameRate fps(sh_fps);
            const auto trace = load_annotation_csv(sh_in, Dimension::arousal, fps);
            save_annotation_csv(shift_annotations(trace, {sh_frames, fps}).values(), sh_out);
        } else if (*evaluate) {
            const auto pred = load_trace_csv(ev_pred);
            const auto truth = load_trace_csv(ev_truth);
            if (ev_metric == "sse") {
                if (pred.size() != truth.size()) {
                    throw DataError("prediction/truth length mismatch " + std::to_string(pred.size()) + " vs " +
                                    std::to_string(truth.size()));
                }
                std::cout << format_decimal(sse(pred, truth)) << "\n";
            } else {
                const PredictionPair pair(pred, truth);
                const auto c = ev_metric == "ccc" ? ccc(pair) : pearson(pair);
                std::cout << format_decimal(c.value) << (c.degenerate ? " (degenerate)" : "") << "\n";
            }
        } else if (*synth) {
            if (g.out_dir.empty()) throw ConfigError("synth needs --out-dir");
            if (g.seed) sy.seed = *g.seed;
            const auto manifest = generate_synthetic_corpus(sy, g.out_dir);
            std::cout << "wrote " << manifest.recordings.size() << " recordings to "
                      << (fs::path(g.out_dir) / "manifest.json").string() << "\n";
        } else if (*sweep) {
            const auto c = experiment_config(g);
            const auto r = run_shift_sweep(c);
            save_results_csv(r.table, c.output_dir / "sweep_results.csv");
            save_sweep_best(r, c.dimension, c.output_dir / "sweep_best.json");
            for (const auto& [kind, s] : r.best_shift) {
                std::cout << to_string(kind) << ": best shift " << s << " frames, validation CCC "
                          << format_decimal(r.best_ccc.at(kind)) << "\n";
            }
        } else if (*train) {
            auto c = experiment_config(g);
            if (!tr_shift_from.empty()) c.shift_by_network = load_sweep_best(tr_shift_from);
            const auto r = run_intra_corpus(c);
            save_results_csv(r.table, c.output_dir / "intra_results.csv");
            for (const auto& m : r.selected_models) save_model(m, c.output_dir / "models" / model_file_name(m));
            for (const auto& [kind, imp] : r.fused_improvement) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%+.2f%%", 100.0 * imp);
                std::cout << to_string(kind) << ": fused vs best unimodal " << buf << "\n";
            }
            return report_unresolved(r.unresolved_cells);
        } else if (*cross) {
            auto c = experiment_config(g);
            if (!cr_shift_from.empty()) c.shift_by_network = load_sweep_best(cr_shift_from);
            const auto r = run_cross_corpus(c);
            save_results_csv(r.table, c.output_dir / "cross_results.csv");
            return report_unresolved(r.unresolved_cells);
        } else if (*report) {
            ResultsTable all;
            for (const auto& path : rp_results) {
                auto t = load_results_csv(path);
                all.rows.insert(all.rows.end(), t.rows.begin(), t.rows.end());
            }
            const auto text = render_report(all, rp_format == "csv" ? ReportFormat::csv : ReportFormat::markdown);
            if (rp_out.empty()) {
                std::cout << text;
            } else {
                write_file(rp_out, text);
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kUsage;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return kDivergence;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    }
    return kOk;
}
