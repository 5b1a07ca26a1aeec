#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "vsum/tensor.hpp"

VSUM_NS_BEGIN

// Contiguous frame interval [first, last], both inclusive.
struct Fragment {
    int first = 0;
    int last = 0;
};

// Binary per-frame selection vector; one entry per sampled frame.
using SummaryMask = std::vector<std::uint8_t>;

// Per-frame importance scores together with the video's fragmentation.
struct FrameScores {
    std::vector<Real> values;
    std::vector<Fragment> fragments;
};

// Transcript sentence embedding with the time span it covers.
struct TimedTranscript {
    std::vector<Real> embedding;
    double start_s = 0;
    double end_s = 0;
};

struct VideoRecord {
    std::string id;
    Tensor2 frames;  // N x D, one row per sampled frame (1 frame/sec)
    std::vector<Fragment> fragments;
    std::vector<TimedTranscript> transcripts;
    Tensor2 transcripts_expanded;  // N x D, built at load time

    int n_frames() const { return frames.rows; }
};

struct ScriptRecord {
    std::string id;
    std::string video_id;
    Tensor2 sentences;  // M x D, M >= 1
};

struct GroundTruth {
    std::string script_id;
    SummaryMask mask;
    std::optional<std::vector<Real>> importance;
};

struct Corpus {
    int dim = 0;
    std::vector<VideoRecord> videos;
    std::vector<ScriptRecord> scripts;
    std::vector<GroundTruth> ground_truths;
    // video ids per split; empty when the manifest defines no splits
    std::vector<std::string> split_train, split_val, split_test;
    bool importance_annotated = false;

    int video_index(const std::string& id) const;
    int script_index(const std::string& id) const;
    int gt_index_of_script(const std::string& script_id) const;
    std::vector<int> scripts_of_video(int video_idx) const;
    void rebuild_indices();

private:
    std::unordered_map<std::string, int> video_by_id_;
    std::unordered_map<std::string, int> script_by_id_;
    std::unordered_map<std::string, int> gt_by_script_;
    std::vector<std::vector<int>> scripts_by_video_;
};

// Reads and fully validates a corpus; every invariant violation raises a
// distinct error naming the offending record.
Corpus load_corpus(const std::filesystem::path& manifest_path);

// Writes manifest + tensor payloads so that load_corpus round-trips.
void write_corpus(const std::filesystem::path& dir, const Corpus& corpus,
                  const std::string& manifest_name = "manifest.json");

// Replicates each transcript embedding across the frames its span covers;
// frame n covers [n, n+1)/frame_rate seconds. Frames covered by no
// transcript get zero rows. Overlaps: earlier start wins, then longer
// span, then lower list index.
Tensor2 expand_transcripts(const std::vector<TimedTranscript>& transcripts, int n_frames, int dim,
                           double frame_rate = 1.0);

// Fallback fragmentation for corpora without shot boundaries: uniform
// 5-frame fragments, last one truncated.
std::vector<Fragment> uniform_fragments(int n_frames, int frames_per_fragment = 5);

void write_scores(const std::string& video_id, const FrameScores& scores,
                  const std::filesystem::path& out_path);
std::vector<Real> read_scores(const std::filesystem::path& path);

void write_summary(const std::string& video_id, const SummaryMask& mask,
                   const std::filesystem::path& out_path);
struct SummaryFile {
    std::string video_id;
    SummaryMask mask;
};
SummaryFile read_summary(const std::filesystem::path& path);

VSUM_NS_END
