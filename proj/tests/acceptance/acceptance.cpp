// Runs the nine acceptance checks and prints one PASS/FAIL line for each.
// Pass criterion numbers as arguments to run a subset.

#include "gazeaffect/error.hpp"
#include "gazeaffect/experiment.hpp"
#include "gazeaffect/fusion.hpp"
#include "gazeaffect/gaze_features.hpp"
#include "gazeaffect/metrics.hpp"
#include "gazeaffect/sequence_net.hpp"
#include "gazeaffect/synthetic.hpp"
#include "gazeaffect/trainer.hpp"

#include "oracles.hpp"
#include "tasks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace gazeaffect;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// Settings shared by the training-heavy checks.
ExperimentConfig small_net_config(const fs::path& manifest, const fs::path& out) {
    ExperimentConfig c;
    c.train_manifest = manifest;
    c.networks = {{LayerKind::lstm, {16, 12}}, {LayerKind::blstm, {16, 12}}};
    c.learning_rates = {1e-4};
    c.output_dir = out;
    return c;
}

Outcome ccc_oracle() {
    Outcome o;
    const std::vector<double> x{1, 2, 3, 4}, y{2, 3, 4, 5};
    const double worked = ccc(PredictionPair(x, y)).value;
    o.require(std::abs(worked - 5.0 / 7.0) < 1e-12, "worked example gives " + fmt("%.17g", worked));

    std::mt19937_64 rng(20240611);
    std::uniform_int_distribution<std::size_t> len(2, 500);
    std::uniform_real_distribution<double> scale(0.01, 10.0), shift(-5.0, 5.0), mix(-1.0, 1.0);
    std::normal_distribution<double> n(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t m = len(rng);
        const double a = mix(rng);
        const double sx = scale(rng), sy = scale(rng), mx = shift(rng), my = shift(rng);
        std::vector<double> p(m), t(m);
        for (std::size_t k = 0; k < m; ++k) {
            const double common = n(rng);
            p[k] = mx + sx * common;
            t[k] = my + sy * (a * common + std::sqrt(1.0 - a * a) * n(rng));
        }
        worst = std::max(worst, std::abs(ccc(PredictionPair(p, t)).value - oracle::ccc(p, t)));
    }
    o.require(worst < 1e-12, "max |delta| " + fmt("%.3g", worst));
    o.detail = o.detail.empty() ? "1000 pairs, max |delta| " + fmt("%.3g", worst) : o.detail;
    return o;
}

Outcome gradient_check_all() {
    Outcome o;
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const std::size_t frames = 20 + static_cast<std::size_t>(std::mt19937_64(seed)() % 31);
        for (auto kind : {LayerKind::lstm, LayerKind::blstm}) {
            const auto r = gradient_check(NetworkSpec::stacked(kind, {8, 6}, 5), seed, 1e-4, frames, 1e-5);
            worst = std::max(worst, r.max_relative_error);
            o.require(r.passed, std::string(to_string(kind)) + " seed " + std::to_string(seed) + " worst " +
                                    r.worst_parameter + " " + fmt("%.3g", r.max_relative_error));
        }
    }
    if (o.pass) o.detail = "20 checks, max relative error " + fmt("%.3g", worst);
    return o;
}

GazeLog uniform_log(std::size_t n, double h, double v, bool closed, bool valid) {
    GazeLog log;
    log.fps = FrameRate(25.0);
    for (std::size_t t = 0; t < n; ++t) {
        log.frames.push_back({static_cast<std::int64_t>(t), h, v, closed, valid});
    }
    return log;
}

Outcome gaze_oracle() {
    Outcome o;
    std::mt19937_64 rng(77);
    double worst = 0.0;
    for (int w = 0; w < 50; ++w) {
        const double fps = w % 2 ? 30.0 : 25.0;
        const double seconds = w % 3 == 0 ? 6.0 : 4.0;
        const auto log = oracle::random_gaze_log(rng, 300, fps);
        const auto m = extract_gaze_features(log, WindowSpec{seconds, 1});
        const std::size_t span = frames_for_duration(seconds, FrameRate(fps));
        const std::size_t t = rng() % log.frames.size();
        const std::size_t start = t + 1 >= span ? t + 1 - span : 0;
        const std::vector<GazeFrame> window(log.frames.begin() + static_cast<long>(start),
                                            log.frames.begin() + static_cast<long>(t) + 1);
        const auto expected = oracle::gaze_window(window, fps);
        for (std::size_t c = 0; c < kGazeFeatureCount; ++c) worst = std::max(worst, std::abs(m(t, c) - expected[c]));
    }
    o.require(worst < 1e-9, "max |delta| " + fmt("%.3g", worst));

    const std::vector<std::pair<const char*, GazeLog>> degenerate{
        {"constant gaze", uniform_log(200, 0.3, -0.2, false, true)},
        {"all invalid", uniform_log(200, 0.3, -0.2, false, false)},
        {"all closed", uniform_log(200, 0.3, -0.2, true, true)},
    };
    for (const auto& [name, log] : degenerate) {
        const auto m = extract_gaze_features(log, WindowSpec{4.0, 1});
        const bool finite = std::all_of(m.values().begin(), m.values().end(), [](double v) { return std::isfinite(v); });
        o.require(finite, std::string(name) + " produced NaN/Inf");
    }
    if (o.pass) o.detail = "50 windows, max |delta| " + fmt("%.3g", worst) + ", degenerate inputs finite";
    return o;
}

Outcome shift_mechanics() {
    Outcome o;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    bool property = true;
    for (int rep = 0; rep < 500; ++rep) {
        const std::size_t n = 1 + rng() % 300;
        const std::size_t k = rng() % n;
        std::vector<double> v(n);
        for (auto& x : v) x = u(rng);
        const auto out = shift_annotations(AnnotationTrace(Dimension::arousal, v, FrameRate(25.0)), {k, FrameRate(25.0)});
        property = property && out.size() == n;
        for (std::size_t t = 0; t < n && property; ++t) {
            property = out.values()[t] == (t + k < n ? v[t + k] : 0.0);
        }
    }
    o.require(property, "shift property violated");

    const auto converted = convert_shift({69, FrameRate(25.0)}, FrameRate(30.0));
    o.require(converted.frames == 83, "69@25 -> 30 gave " + std::to_string(converted.frames));
    for (std::size_t ov : {84u, 96u}) {
        o.require(convert_shift({69, FrameRate(25.0)}, FrameRate(30.0), ov).frames == ov,
                  "override " + std::to_string(ov) + " ignored");
    }

    // The cross-corpus harness must carry the converted or overridden shift into its results.
    oracle::TempDir dir;
    SyntheticCorpusSpec spec;
    spec.train_recordings = 1;
    spec.validation_recordings = 1;
    spec.test_recordings = 1;
    spec.speech_features = 4;
    spec.frames = 200;
    spec.corpus_name = "at25";
    generate_synthetic_corpus(spec, dir.path() / "a");
    spec.fps = 30.0;
    spec.frames = 240;
    spec.corpus_name = "at30";
    generate_synthetic_corpus(spec, dir.path() / "b");

    ExperimentConfig c;
    c.train_manifest = dir.path() / "a" / "manifest.json";
    c.test_manifest = dir.path() / "b" / "manifest.json";
    c.modalities = {Modality::speech};
    c.networks = {{LayerKind::lstm, {2}}};
    c.shift_frames = 69;
    c.learning_rates = {1e-4};
    c.training.max_epochs = 2;
    c.training.patience_epochs = 1;
    c.arousal_window_seconds = 1.0;
    for (std::optional<std::size_t> ov : {std::optional<std::size_t>{}, std::optional<std::size_t>{84},
                                          std::optional<std::size_t>{96}}) {
        c.cross_shift_override = ov;
        const auto r = run_cross_corpus(c);
        const std::size_t want = ov ? *ov : 83;
        const bool recorded = !r.table.rows.empty() && r.table.rows.front().shift_frames == 69 &&
                              r.table.rows.front().test_shift_frames == want;
        o.require(recorded, "cross run did not record test shift " + std::to_string(want));
    }
    if (o.pass) o.detail = "500 random traces; 69@25->30 = 83; overrides 84/96 recorded";
    return o;
}

Outcome lag_recovery() {
    Outcome o;
    oracle::TempDir dir;
    SyntheticCorpusSpec spec;  // lag 40 @ 25 fps, noise 0.05
    generate_synthetic_corpus(spec, dir.path() / "corpus");
    auto c = small_net_config(dir.path() / "corpus" / "manifest.json", dir.path() / "out");
    c.sweep.stride = 3;
    const auto r = run_shift_sweep(c);
    for (const auto& n : c.networks) {
        const auto it = r.best_shift.find(n.kind);
        if (it == r.best_shift.end()) {
            o.require(false, std::string(to_string(n.kind)) + " has no selected shift");
            continue;
        }
        const long long err = static_cast<long long>(it->second) - 40;
        o.require(std::abs(err) <= 5, std::string(to_string(n.kind)) + " argmax " + std::to_string(it->second));
        o.detail += (o.detail.empty() || !o.pass ? "" : ", ") + std::string(to_string(n.kind)) + " argmax " +
                    std::to_string(it->second) + " (CCC " + fmt("%.3f", r.best_ccc.at(n.kind)) + ")";
    }
    return o;
}

Outcome fusion_benefit() {
    Outcome o;
    int strictly = 0;
    double worst_margin = 1.0;
    std::string margins;
    for (std::uint64_t rep = 1; rep <= 10; ++rep) {
        oracle::TempDir dir;
        SyntheticCorpusSpec spec;
        spec.seed = rep;
        generate_synthetic_corpus(spec, dir.path());
        auto c = small_net_config(dir.path() / "manifest.json", dir.path() / "out");
        c.networks = {{LayerKind::blstm, {16, 12}}};
        c.shift_frames = 40;
        c.seeds = {1787452436 + rep};
        const auto r = run_intra_corpus(c);
        std::map<Modality, double> val;
        for (const auto& row : r.table.rows) {
            if (row.selected) val[row.modality] = row.validation_ccc;
        }
        if (val.size() != 3) {
            o.require(false, "rep " + std::to_string(rep) + " is missing a modality");
            continue;
        }
        const double margin = val[Modality::fused] - std::max(val[Modality::speech], val[Modality::gaze]);
        worst_margin = std::min(worst_margin, margin);
        strictly += margin > 0.0;
        margins += (margins.empty() ? "" : " ") + fmt("%+.3f", margin);
    }
    o.require(worst_margin >= -0.02, "worst margin " + fmt("%+.3f", worst_margin));
    o.require(strictly >= 8, "fused strictly better in " + std::to_string(strictly) + "/10");
    if (o.pass) o.detail = "fused better in " + std::to_string(strictly) + "/10, margins " + margins;
    return o;
}

Outcome training_protocol() {
    Outcome o;
    const auto small = NetworkSpec::stacked(LayerKind::lstm, {4}, 5);
    const auto train = oracle::teachable_task(1, 8, 100);
    const auto val = oracle::teachable_task(2, 4, 100);
    TrainConfig cfg;
    cfg.learning_rate = 1e-3;

    std::vector<NetworkParams> seen;
    const auto plateau = train_network(small, train, {}, cfg, [&](const NetworkParams& p, int epoch) {
        seen.push_back(p);
        return epoch <= 12 ? 100.0 - epoch : 90.0;
    });
    o.require(plateau.stopped_early && plateau.history.size() == 32 && plateau.best_epoch == 12 &&
                  seen.size() == 32 && plateau.params == seen[11],
              "plateau stop (ran " + std::to_string(plateau.history.size()) + " epochs)");

    const auto capped = train_network(small, train, {}, cfg, [](const NetworkParams&, int epoch) { return -epoch; });
    o.require(!capped.stopped_early && capped.history.size() == 100, "max_epochs cap");

    const auto spec = NetworkSpec::stacked(LayerKind::lstm, {16, 12}, 5);
    const auto learned = train_network(spec, train, val, cfg);
    const double held_out = oracle::pooled_ccc(learned.params, spec, oracle::teachable_task(3, 4, 100));
    o.require(held_out >= 0.9 && learned.history.size() <= 100, "teachable task CCC " + fmt("%.3f", held_out));

    const auto again = train_network(spec, train, val, cfg);
    bool same = again.params == learned.params && again.history.size() == learned.history.size();
    for (std::size_t i = 0; same && i < again.history.size(); ++i) {
        same = again.history[i].train_sse == learned.history[i].train_sse &&
               again.history[i].validation_sse == learned.history[i].validation_sse;
    }
    o.require(same, "rerun differs");
    if (o.pass) o.detail = "stop at 32 for best 12, cap 100, teachable CCC " + fmt("%.3f", held_out) + ", rerun identical";
    return o;
}

Outcome relative_improvements() {
    Outcome o;
    const std::string arousal = fmt("%.2f", 100.0 * relative_improvement(0.754, 0.742));
    const std::string valence = fmt("%.2f", 100.0 * relative_improvement(0.277, 0.261));
    o.require(arousal == "1.62", "arousal " + arousal);
    o.require(valence == "6.13", "valence " + valence);
    if (o.pass) o.detail = "arousal +" + arousal + "%, valence +" + valence + "%";
    return o;
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(GAZEAFFECT_CLI) + " " + args + " >> " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_all(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t table_rows(const std::string& markdown) {
    std::size_t rows = 0;
    std::istringstream in(markdown);
    for (std::string line; std::getline(in, line);) {
        if (line.rfind("| arousal |", 0) == 0 || line.rfind("| valence |", 0) == 0) ++rows;
    }
    return rows;
}

Outcome end_to_end() {
    Outcome o;
    oracle::TempDir dir;
    const auto d = dir.path();
    const auto log = d / "cli.log";
    auto step = [&](const std::string& name, const std::string& args) {
        const int code = run_cli(args, log);
        o.require(code == 0, name + " exited " + std::to_string(code));
        return code == 0;
    };
    const std::string a = (d / "corpus_a").string(), b = (d / "corpus_b").string();
    if (!step("synth a", "--out-dir " + a + " --seed 11 synth --name corpus_a --train 3 --validation 2 --test 2")) {
        return o;
    }
    if (!step("synth b", "--out-dir " + b + " --seed 12 synth --name corpus_b --train 3 --validation 2 --test 2 "
                         "--fps 30 --frames 1800 --lag 48")) {
        return o;
    }
    const auto rec = fs::path(a) / "recordings";
    step("extract-gaze", "extract-gaze --in " + (rec / "train_01_gaze.csv").string() +
                             " --fps 25 --window-seconds 4 --out " + (d / "gaze_features.csv").string());
    step("fuse", "fuse --speech " + (rec / "train_01_speech.csv").string() + " --gaze " +
                     (d / "gaze_features.csv").string() + " --fps 25 --out " + (d / "fused.csv").string());
    if (!o.pass) return o;
    const auto fused = load_feature_csv(d / "fused.csv", FrameRate(25.0));
    o.require(fused.rows() == 1500 && fused.cols() == 88 + kGazeFeatureCount, "fused CSV has the wrong shape");

    auto c = small_net_config(fs::path(a) / "manifest.json", d / "results");
    c.test_manifest = fs::path(b) / "manifest.json";
    c.sweep.stride = 6;
    save_experiment_config(c, d / "config.json");
    const std::string cfg = "--config " + (d / "config.json").string();
    const std::string best = (d / "results" / "sweep_best.json").string();
    if (!step("sweep", cfg + " sweep")) return o;
    if (!step("train", cfg + " train --shift-from " + best)) return o;
    if (!step("cross-eval", cfg + " cross-eval --shift-from " + best)) return o;
    step("report intra", "report --results " + (d / "results" / "intra_results.csv").string() +
                             " --format markdown --out " + (d / "intra.md").string());
    step("report cross", "report --results " + (d / "results" / "cross_results.csv").string() +
                             " --format markdown --out " + (d / "cross.md").string());
    if (!o.pass) return o;

    const auto intra = read_all(d / "intra.md");
    const auto cross = read_all(d / "cross.md");
    const std::string header = "| Dimension | Modality | Network | Shift |";
    o.require(intra.rfind(header, 0) == 0 && table_rows(intra) == 6, "intra report is not 3 modalities x 2 networks");
    o.require(intra.find("Relative improvement") != std::string::npos, "intra report lacks the improvement footer");
    o.require(cross.rfind(header, 0) == 0 && table_rows(cross) == 6 &&
                  cross.find("| corpus_a | corpus_b |") != std::string::npos,
              "cross report is not corpus_a -> corpus_b for 6 cells");
    if (o.pass) o.detail = "all steps exit 0; intra and cross reports have 6 selected cells each";
    return o;
}

struct Criterion {
    int id;
    const char* name;
    double limit_seconds;  // 0 for no limit
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "ccc oracle", 5.0, ccc_oracle},
        {2, "gradient check", 60.0, gradient_check_all},
        {3, "gaze feature oracle", 30.0, gaze_oracle},
        {4, "shift mechanics", 0.0, shift_mechanics},
        {5, "lag recovery", 600.0, lag_recovery},
        {6, "fusion benefit", 900.0, fusion_benefit},
        {7, "training protocol", 0.0, training_protocol},
        {8, "relative improvement", 0.0, relative_improvements},
        {9, "end to end cli", 1200.0, end_to_end},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failures = 0;
    for (const auto& c : all) {
        if (!only.empty() && !only.contains(c.id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.limit_seconds > 0.0 && secs >= c.limit_seconds) {
            o.pass = false;
            o.detail += "; over the " + fmt("%.0f", c.limit_seconds) + " s limit";
        }
        failures += !o.pass;
        std::printf("criterion %d %s: %s (%s, %.1f s)\n", c.id, c.name, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
