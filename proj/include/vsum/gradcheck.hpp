#pragma once

#include "vsum/model.hpp"

VSUM_NS_BEGIN

struct GradCheckConfig {
    int n_frames = 6;
    int m_sentences = 3;
    int k_transcripts = 2;
    int dim = 8;
    int heads = 2;
    double step = 1e-5;
    std::uint64_t seed = 0;
    bool use_transcript_branch = true;
    bool use_similarity_scaling = true;
    // negative-control hook: perturbs one analytic gradient entry so the
    // check must fail
    bool corrupt = false;
};

struct GradCheckTensorReport {
    std::string name;
    int entries = 0;
    double max_rel = 0;     // |a-f| / max(1e-8, |a|+|f|), worst entry
    double max_abs = 0;     // |a-f|, worst entry
    double strong_rel = 0;  // plain relative error over entries with |a|+|f| > 1e-2
    double weak_abs = 0;    // absolute error over the remaining entries
};

struct GradCheckReport {
    std::vector<GradCheckTensorReport> tensors;
    double worst_rel = 0;
    double loss = 0;
};

// Central finite differences against the tape's analytic gradients for the
// complete training objective (forward pass + binary cross-entropy) on a
// small random instance, dropout disabled. Guarded relative error
// |a-f| / max(1e-8, |a|+|f|) avoids the 0/0 case for dead entries.
GradCheckReport gradient_check(const GradCheckConfig& cfg);

VSUM_NS_END
