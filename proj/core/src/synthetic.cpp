#include "gazeaffect/synthetic.hpp"

#include "csv.hpp"
#include "gazeaffect/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

namespace gazeaffect {

namespace fs = std::filesystem;

namespace {

constexpr double kSpeechPersistence = 0.9;
constexpr double kGazePersistence = 0.995;
constexpr double kNuisancePersistence = 0.8;
constexpr double kTargetScale = 0.5;
constexpr double kSaccadeProbability = 0.1;
constexpr double kBlinkProbability = 0.015;
constexpr double kDropoutProbability = 0.01;

// Six decimals keeps the CSVs small and makes every written value exact.
double quantize(double x) { return std::round(x * 1e6) / 1e6; }

// Stationary unit-variance AR(1).
std::vector<double> ar1(std::size_t n, double phi, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> out(n);
    const double innovation = std::sqrt(1.0 - phi * phi);
    double x = normal(rng);
    for (auto& v : out) {
        v = x;
        x = phi * x + innovation * normal(rng);
    }
    return out;
}

struct Recording {
    std::string id;
    Partition partition;
};

struct SpeechChannel {
    double loading = 0.0;
    double offset = 0.0;
    double scale = 1.0;
};

// Channel 0 is the latent itself, the first half of the rest load on it, the
// remainder are nuisance.
std::vector<SpeechChannel> speech_design(const SyntheticCorpusSpec& spec) {
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32), 0xd1u};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<SpeechChannel> out(spec.speech_features);
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (k == 0) {
            out[k].loading = 1.0;
        } else if (k < spec.speech_features / 2) {
            out[k].loading = (0.5 + 0.5 * unit(rng)) * (unit(rng) < 0.5 ? -1.0 : 1.0);
        }
        out[k].offset = 4.0 * unit(rng) - 2.0;
        out[k].scale = 0.5 + 2.5 * unit(rng);
    }
    return out;
}

void write_recording(const SyntheticCorpusSpec& spec, const std::vector<SpeechChannel>& design, const Recording& rec,
                     std::size_t ordinal, const fs::path& dir, RecordingEntry& entry) {
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(ordinal)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const std::size_t n = spec.frames;
    const std::size_t lag = spec.lag_frames;
    // Latent index i is time i - lag, so the annotation at frame t can look
    // back to t - lag without running off the start.
    const auto speech_latent = ar1(n + lag, kSpeechPersistence, rng);
    const auto gaze_latent = ar1(n + lag, kGazePersistence, rng);
    const auto vertical_latent = ar1(n, kGazePersistence, rng);

    const FrameRate fps(spec.fps);

    // Speech-like features: the same loadings in every recording of the corpus.
    std::vector<std::string> names;
    for (std::size_t k = 0; k < spec.speech_features; ++k) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "speech_%03zu", k);
        names.emplace_back(buf);
    }
    std::vector<double> speech(n * spec.speech_features);
    for (std::size_t k = 0; k < spec.speech_features; ++k) {
        const auto& d = design[k];
        const auto nuisance = ar1(n, kNuisancePersistence, rng);
        const double residual = std::sqrt(std::max(0.0, 1.0 - d.loading * d.loading));
        for (std::size_t t = 0; t < n; ++t) {
            const double x = d.loading * speech_latent[t + lag] + residual * nuisance[t];
            speech[t * spec.speech_features + k] = quantize(d.offset + d.scale * x);
        }
    }
    save_feature_csv(FeatureMatrix(names, n, std::move(speech), fps), dir / (rec.id + "_speech.csv"));

    // Gaze: fixations around a target that follows the gaze latent, re-drawn
    // at saccades, plus blinks and tracking dropouts.
    GazeLog log;
    log.fps = fps;
    log.frames.resize(n);
    double target_h = 0.0;
    double target_v = 0.0;
    std::size_t blink_left = 0;
    for (std::size_t t = 0; t < n; ++t) {
        if (t == 0 || unit(rng) < kSaccadeProbability) {
            target_h = 0.5 * gaze_latent[t + lag] + 0.1 * normal(rng);
            target_v = 0.3 * vertical_latent[t] + 0.1 * normal(rng);
        }
        if (blink_left == 0 && unit(rng) < kBlinkProbability) {
            blink_left = 2 + static_cast<std::size_t>(unit(rng) * 5.0);
        }
        auto& f = log.frames[t];
        f.index = static_cast<std::int64_t>(t);
        f.h = quantize(target_h + 0.004 * normal(rng));
        f.v = quantize(target_v + 0.004 * normal(rng));
        f.eye_closed = blink_left > 0;
        if (blink_left > 0) --blink_left;
        f.valid = unit(rng) >= kDropoutProbability;
    }
    save_gaze_log_csv(log, dir / (rec.id + "_gaze.csv"));

    std::vector<double> arousal(n);
    std::vector<double> valence(n);
    std::string latent_csv = "frame,speech,gaze\n";
    for (std::size_t t = 0; t < n; ++t) {
        const double s = speech_latent[t];  // time t - lag
        const double g = gaze_latent[t];
        const double a = kTargetScale * (spec.speech_weight * s + spec.gaze_weight * g);
        const double v = kTargetScale * (spec.gaze_weight * s + spec.speech_weight * g);
        arousal[t] = quantize(std::clamp(a + spec.noise_level * normal(rng), -1.0, 1.0));
        valence[t] = quantize(std::clamp(v + spec.noise_level * normal(rng), -1.0, 1.0));
        latent_csv += std::to_string(t) + "," + format_decimal(speech_latent[t + lag]) + "," +
                      format_decimal(gaze_latent[t + lag]) + "\n";
    }
    save_annotation_csv(arousal, dir / (rec.id + "_arousal.csv"));
    save_annotation_csv(valence, dir / (rec.id + "_valence.csv"));
    csv::write_text(dir / (rec.id + "_latent.csv"), latent_csv);

    entry.id = rec.id;
    entry.partition = rec.partition;
    entry.fps = fps;
    entry.speech_features = fs::path("recordings") / (rec.id + "_speech.csv");
    entry.gaze_log = fs::path("recordings") / (rec.id + "_gaze.csv");
    entry.annotations[Dimension::arousal] = fs::path("recordings") / (rec.id + "_arousal.csv");
    entry.annotations[Dimension::valence] = fs::path("recordings") / (rec.id + "_valence.csv");
}

}  // namespace

void SyntheticCorpusSpec::validate() const {
    if (train_recordings == 0 || validation_recordings == 0) {
        throw ConfigError("synthetic corpus needs train and validation recordings");
    }
    if (frames < 2) {
        throw ConfigError("synthetic recordings need at least two frames");
    }
    if (lag_frames >= frames) {
        throw ConfigError("annotator lag must be shorter than the recording");
    }
    if (!(noise_level >= 0.0)) {
        throw ConfigError("noise level must be non-negative");
    }
    if (speech_features == 0) {
        throw ConfigError("need at least one speech feature");
    }
    static_cast<void>(FrameRate(fps));
}

CorpusManifest generate_synthetic_corpus(const SyntheticCorpusSpec& spec, const fs::path& out_dir) {
    spec.validate();
    const fs::path rec_dir = out_dir / "recordings";
    std::error_code ec;
    fs::create_directories(rec_dir, ec);
    if (ec || !fs::is_directory(rec_dir)) {
        throw DataError("cannot create output directory " + rec_dir.string());
    }

    std::vector<Recording> plan;
    auto add = [&](std::size_t count, Partition p) {
        for (std::size_t i = 1; i <= count; ++i) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%s_%02zu", std::string(to_string(p)).c_str(), i);
            plan.push_back({buf, p});
        }
    };
    add(spec.train_recordings, Partition::train);
    add(spec.validation_recordings, Partition::validation);
    add(spec.test_recordings, Partition::test);

    const auto design = speech_design(spec);
    CorpusManifest manifest;
    manifest.corpus_name = spec.corpus_name;
    for (std::size_t i = 0; i < plan.size(); ++i) {
        RecordingEntry entry;
        write_recording(spec, design, plan[i], i, rec_dir, entry);
        manifest.recordings.push_back(std::move(entry));
    }
    save_corpus_manifest(manifest, out_dir / "manifest.json");
    for (auto& r : manifest.recordings) {
        r.speech_features = out_dir / r.speech_features;
        r.gaze_log = out_dir / r.gaze_log;
        for (auto& [dim, p] : r.annotations) p = out_dir / p;
    }
    return manifest;
}

}  // namespace gazeaffect
