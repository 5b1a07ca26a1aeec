#pragma once

// Hand-traced evaluation fixtures. Every score is a multiple of 1/16 so
// sums and averages are exact in either float width, keeping the tie
// structure of the traced tables intact. Expected numbers were derived by
// hand from the protocol definitions, not from the library.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "vsum/metrics.hpp"

namespace fixture {

// Scores looked up by script id; the video content is never touched.
class TableScorer : public vsum::Scorer {
public:
    std::map<std::string, std::vector<vsum::Real>> table;

    std::vector<vsum::Real> score(const vsum::VideoRecord&,
                                  const vsum::ScriptRecord& script) const override {
        return table.at(script.id);
    }
};

inline vsum::VideoRecord make_video(const std::string& id, int n, int dim) {
    vsum::VideoRecord v;
    v.id = id;
    v.frames = vsum::Tensor2(n, dim);
    v.transcripts_expanded = vsum::Tensor2(n, dim);
    return v;
}

inline void add_pair(vsum::Corpus& corpus, const std::string& video_id,
                     const std::string& script_id, const vsum::SummaryMask& mask) {
    vsum::ScriptRecord s;
    s.id = script_id;
    s.video_id = video_id;
    s.sentences = vsum::Tensor2(1, corpus.dim);
    corpus.scripts.push_back(std::move(s));
    vsum::GroundTruth g;
    g.script_id = script_id;
    g.mask = mask;
    corpus.ground_truths.push_back(std::move(g));
}

struct MultiFixture {
    vsum::Corpus corpus;
    TableScorer scorer;
    double fraction = 0.5;

    // traced per-video values
    double f_va = 0.5;
    double f_vb = 0.75;
    double tau_va = 1.0 / std::sqrt(30.0);   // C=3 D=2, one tie pair in gt
    double rho_va = 1.0 / std::sqrt(10.0);
    double tau_vb = 1.0 / std::sqrt(7.0);    // C=3 D=1, ties on both sides
    double rho_vb = 2.5 / std::sqrt(40.0);
    double mean_f = 0.625;
};

// Two videos, two scripts each, fraction 1/2.
//
// va (4 frames, budget 2):
//   s1 [14,12,2,4]/16  -> top {0,1}, gt {0,1}      -> F 1
//   s2 [2,14,12,4]/16  -> top {1,2}, gt {0,3}      -> F 0
//   averaged pred [8,13,7,4]/16, averaged gt [1,.5,0,.5]
// vb (5 frames, budget 2):
//   s3 [14,12,10,2,1]/16 -> top {0,1}, gt {0,1}    -> F 1
//   s4 [10,12,14,13,15]/16 -> top {2,4}, gt {2,3}  -> F 1/2
//   averaged pred [12,12,12,7.5,8]/16, averaged gt [.5,.5,.5,.5,0]
inline MultiFixture make_multi_fixture() {
    MultiFixture fx;
    fx.corpus.dim = 4;
    fx.corpus.videos.push_back(make_video("va", 4, 4));
    fx.corpus.videos.push_back(make_video("vb", 5, 4));
    add_pair(fx.corpus, "va", "s1", {1, 1, 0, 0});
    add_pair(fx.corpus, "va", "s2", {1, 0, 0, 1});
    add_pair(fx.corpus, "vb", "s3", {1, 1, 0, 0, 0});
    add_pair(fx.corpus, "vb", "s4", {0, 0, 1, 1, 0});
    fx.corpus.rebuild_indices();
    fx.scorer.table["s1"] = {0.875f, 0.75f, 0.125f, 0.25f};
    fx.scorer.table["s2"] = {0.125f, 0.875f, 0.75f, 0.25f};
    fx.scorer.table["s3"] = {0.875f, 0.75f, 0.625f, 0.125f, 0.0625f};
    fx.scorer.table["s4"] = {0.625f, 0.75f, 0.875f, 0.8125f, 0.9375f};
    return fx;
}

struct SingleFixture {
    vsum::Corpus corpus;
    TableScorer scorer;
    double fraction = 0.5;

    double f_vc = 1.0;
    double f_vd = 2.0 * (2.0 / 3.0) / (1.0 + 2.0 / 3.0);  // P 1, R 2/3
    double tau_vc = 1.0, rho_vc = 1.0;    // importance co-monotone with scores
    double tau_vd = -1.0, rho_vd = -1.0;  // importance anti-monotone
};

// Two videos, one scripted ground truth each, fraction 1/2.
//
// vc (10 frames, fragments [0,2][3,5][6,9], capacity 5):
//   fragment means [2,13,5.5]/16; only single fragments fit, knapsack
//   takes fragment 1 -> frames {3,4,5} = gt -> F 1
// vd (8 frames, fragments [0,1][2,4][5,7], capacity 4):
//   fragment means [14.5,3,7]/16; knapsack takes fragment 0 ->
//   frames {0,1}, gt {0,1,5} -> P 1, R 2/3
inline SingleFixture make_single_fixture() {
    SingleFixture fx;
    fx.corpus.dim = 4;
    fx.corpus.importance_annotated = true;

    vsum::VideoRecord vc = make_video("vc", 10, 4);
    vc.fragments = {{0, 2}, {3, 5}, {6, 9}};
    fx.corpus.videos.push_back(std::move(vc));
    vsum::VideoRecord vd = make_video("vd", 8, 4);
    vd.fragments = {{0, 1}, {2, 4}, {5, 7}};
    fx.corpus.videos.push_back(std::move(vd));

    add_pair(fx.corpus, "vc", "sc", {0, 0, 0, 1, 1, 1, 0, 0, 0, 0});
    add_pair(fx.corpus, "vd", "sd", {1, 1, 0, 0, 0, 1, 0, 0});

    const std::vector<vsum::Real> scores_c = {0.0625f, 0.125f,  0.1875f, 0.875f, 0.8125f,
                                              0.75f,   0.25f,   0.3125f, 0.375f, 0.4375f};
    const std::vector<vsum::Real> scores_d = {0.9375f, 0.875f, 0.25f,   0.1875f,
                                              0.125f,  0.5f,   0.4375f, 0.375f};
    fx.scorer.table["sc"] = scores_c;
    fx.scorer.table["sd"] = scores_d;

    std::vector<vsum::Real> imp_c, imp_d;
    for (vsum::Real s : scores_c) imp_c.push_back(s * vsum::Real(0.5));
    for (vsum::Real s : scores_d) imp_d.push_back(vsum::Real(1) - s);
    fx.corpus.ground_truths[0].importance = imp_c;
    fx.corpus.ground_truths[1].importance = imp_d;

    fx.corpus.rebuild_indices();
    return fx;
}

// Emits the paired ground-truth mask (or importance) as the score vector.
class GroundTruthScorer : public vsum::Scorer {
public:
    explicit GroundTruthScorer(const vsum::Corpus& corpus) : corpus_(&corpus) {}

    std::vector<vsum::Real> score(const vsum::VideoRecord&,
                                  const vsum::ScriptRecord& script) const override {
        const int g = corpus_->gt_index_of_script(script.id);
        const vsum::GroundTruth& gt = corpus_->ground_truths[static_cast<std::size_t>(g)];
        std::vector<vsum::Real> out(gt.mask.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = gt.mask[i] ? vsum::Real(1) : vsum::Real(0);
        }
        return out;
    }

private:
    const vsum::Corpus* corpus_;
};

}  // namespace fixture
