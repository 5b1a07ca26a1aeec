#pragma once

#include <optional>

#include "vsum/corpus.hpp"
#include "vsum/model.hpp"

VSUM_NS_BEGIN

// Harmonic mean of precision and recall over binary masks. Both empty
// counts as perfect agreement; P + R = 0 gives 0.
double f_score(const SummaryMask& pred, const SummaryMask& gt);

// Tie-corrected rank correlations. A constant vector on either side makes
// the coefficient undefined; that is reported as nullopt and callers count
// it as a skip instead of folding a fake zero into corpus means.
std::optional<double> kendall_tau(const std::vector<double>& a, const std::vector<double>& b);
std::optional<double> spearman_rho(const std::vector<double>& a, const std::vector<double>& b);

// Mean ranks (ties averaged), 1-based.
std::vector<double> average_ranks(const std::vector<double>& a);

struct EvalReport {
    struct VideoEntry {
        std::string video_id;
        double f = 0;  // [0,1]
        std::optional<double> tau;
        std::optional<double> rho;
    };
    std::vector<VideoEntry> videos;
    double mean_f = 0;
    std::optional<double> mean_tau;
    std::optional<double> mean_rho;
    int n_videos = 0;
    int n_pairs = 0;        // (script, ground truth) pairs scored
    int rank_skipped = 0;   // videos excluded from the tau/rho means
    int videos_skipped = 0; // videos without any scorable pair
};

// Anything that can score the frames of a video against a script. The
// trained network is one implementation; tests inject synthetic oracles.
class Scorer {
public:
    virtual ~Scorer() = default;
    virtual std::vector<Real> score(const VideoRecord& video, const ScriptRecord& script) const = 0;
};

class ModelScorer : public Scorer {
public:
    explicit ModelScorer(const ModelParams& params) : params_(&params) {}
    std::vector<Real> score(const VideoRecord& video, const ScriptRecord& script) const override;

private:
    const ModelParams* params_;
};

struct EvalOptions {
    double fraction = 0.15;
    // video ids to evaluate; empty means every video in the corpus
    std::vector<std::string> video_ids;
    int threads = 1;  // per-video parallelism; results are placed by index
};

// Multi-ground-truth protocol: per video, one top-fraction summary per
// script, each compared to its paired ground truth; the per-video F is
// their mean. tau/rho compare the script-averaged predicted scores with
// the frame-level average of the binary ground truths.
EvalReport eval_multi_gt(const Scorer& scorer, const Corpus& corpus, const EvalOptions& opts = {});

// Single-ground-truth protocol: fragment-level knapsack summary at the
// capacity fraction, F against the one ground-truth mask, tau/rho against
// the annotated frame importances (skipped when absent).
EvalReport eval_single_gt(const Scorer& scorer, const Corpus& corpus, const EvalOptions& opts = {});

std::string report_json(const EvalReport& report);
// Plain-text table: one row per video plus the corpus means; F in percent
// with one decimal.
std::string report_table(const EvalReport& report);

VSUM_NS_END
