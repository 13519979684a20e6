#pragma once

#include "gazeaffect/timeline.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

namespace gazeaffect {

// Desk-scale stand-in for a licensed corpus. Two latent channels drive the
// data: a speech latent (fast, visible in the speech feature CSV) and a gaze
// latent (slow, visible in the horizontal gaze coordinate). Annotations are a
// lagged, clipped mixture of both plus white noise.
struct SyntheticCorpusSpec {
    std::string corpus_name = "synthetic";
    std::size_t train_recordings = 3;
    std::size_t validation_recordings = 2;
    std::size_t test_recordings = 2;
    std::size_t frames = 1500;
    double fps = 25.0;
    std::size_t lag_frames = 40;  // annotator reaction lag
    double noise_level = 0.05;    // std of the annotation noise
    std::size_t speech_features = 88;
    // Arousal mixes the latents with these weights; valence swaps them.
    double speech_weight = 0.6;
    double gaze_weight = 0.4;
    std::uint64_t seed = 1;

    void validate() const;
};

// Writes <out_dir>/manifest.json plus per-recording speech, gaze, annotation
// and latent CSVs. The output is a pure function of the spec.
CorpusManifest generate_synthetic_corpus(const SyntheticCorpusSpec& spec, const std::filesystem::path& out_dir);

}  // namespace gazeaffect
