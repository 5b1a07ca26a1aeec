#pragma once

#include "vsum/corpus.hpp"

VSUM_NS_BEGIN

// Deterministic synthetic corpus with a planted cross-modal signal: for
// every script a disjoint set of frames is rebuilt to have an exact cosine
// of `strength` with one of the script's sentences, ground truths mark
// exactly those frames, and transcripts echo the matched sentences over a
// coverage fraction of the planted spans.
struct SynthSpec {
    int n_videos = 8;
    int frames_min = 40;
    int frames_max = 60;
    int dim = 32;
    int scripts_per_video = 2;
    int sentences_per_script = 3;
    double coverage = 1.0;         // planted frames echoed by a transcript span
    double strength = 1.0;         // planted cosine similarity, in [0, 1]
    double summary_fraction = 0.15;
    bool with_importance = false;  // emit smoothed-mask importance scores
    bool shared_splits = false;    // train = val = test = all videos (overfit runs)
    std::uint64_t seed = 0;

    void validate() const;
};

Corpus generate_corpus(const SynthSpec& spec);

// generate_corpus + write_corpus into dir.
void generate(const SynthSpec& spec, const std::filesystem::path& dir);

VSUM_NS_END
