#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Width-free view of the gradient check, implemented by a translation unit
// compiled with the double-precision engine. Finite differences at the
// strict 1e-4 threshold need the wider type; single-precision roundoff
// alone exceeds it at usable step sizes.
namespace vsum_bridge {

struct GradCheck64Config {
    int n_frames = 6;
    int m_sentences = 3;
    int k_transcripts = 2;
    int dim = 8;
    int heads = 2;
    double step = 1e-5;
    std::uint64_t seed = 0;
    bool use_transcript_branch = true;
    bool use_similarity_scaling = true;
    bool corrupt = false;
};

struct GradCheck64Tensor {
    std::string name;
    int entries = 0;
    double max_rel = 0;
    double max_abs = 0;
};

struct GradCheck64Report {
    std::vector<GradCheck64Tensor> tensors;
    double worst_rel = 0;
    double loss = 0;
};

GradCheck64Report gradient_check64(const GradCheck64Config& cfg);

}  // namespace vsum_bridge
