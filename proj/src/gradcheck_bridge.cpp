// Compiled with VSUM_REAL64; everything below runs in the f64 engine.
#ifndef VSUM_REAL64
#error "gradcheck_bridge.cpp must be compiled with -DVSUM_REAL64"
#endif

#include "vsum/gradcheck_bridge.hpp"

#include "vsum/gradcheck.hpp"

namespace vsum_bridge {

GradCheck64Report gradient_check64(const GradCheck64Config& cfg) {
    vsum::GradCheckConfig inner;
    inner.n_frames = cfg.n_frames;
    inner.m_sentences = cfg.m_sentences;
    inner.k_transcripts = cfg.k_transcripts;
    inner.dim = cfg.dim;
    inner.heads = cfg.heads;
    inner.step = cfg.step;
    inner.seed = cfg.seed;
    inner.use_transcript_branch = cfg.use_transcript_branch;
    inner.use_similarity_scaling = cfg.use_similarity_scaling;
    inner.corrupt = cfg.corrupt;

    const vsum::GradCheckReport inner_report = vsum::gradient_check(inner);
    GradCheck64Report report;
    report.worst_rel = inner_report.worst_rel;
    report.loss = inner_report.loss;
    for (const vsum::GradCheckTensorReport& t : inner_report.tensors) {
        report.tensors.push_back({t.name, t.entries, t.max_rel, t.max_abs});
    }
    return report;
}

}  // namespace vsum_bridge
