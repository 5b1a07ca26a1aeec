#include "vsum/gradcheck.hpp"

#include <cmath>

#include "vsum/corpus.hpp"

VSUM_NS_BEGIN

namespace {

Tensor2 random_matrix(int rows, int cols, Rng& rng) {
    Tensor2 t(rows, cols);
    for (Real& x : t.v) x = static_cast<Real>(rng.normal());
    return t;
}

double guarded_rel(double a, double f) {
    return std::abs(a - f) / std::max(1e-8, std::abs(a) + std::abs(f));
}

}  // namespace

GradCheckReport gradient_check(const GradCheckConfig& cfg) {
    if (cfg.n_frames < 1 || cfg.m_sentences < 1 || cfg.k_transcripts < 1) {
        throw ConfigError("gradient check: sizes must be positive");
    }
    if (!(cfg.step > 0)) {
        throw ConfigError("gradient check: step must be positive");
    }
    ModelConfig model_cfg;
    model_cfg.dim = cfg.dim;
    model_cfg.heads = cfg.heads;
    model_cfg.use_transcript_branch = cfg.use_transcript_branch;
    model_cfg.use_similarity_scaling = cfg.use_similarity_scaling;
    model_cfg.dropout_rate = 0;
    model_cfg.validate();

    Rng rng(cfg.seed + 17);
    const Tensor2 frames = random_matrix(cfg.n_frames, cfg.dim, rng);
    const Tensor2 script = random_matrix(cfg.m_sentences, cfg.dim, rng);
    // k transcript spans tiling the video, so the expansion path is active
    std::vector<TimedTranscript> transcripts;
    for (int i = 0; i < cfg.k_transcripts; ++i) {
        TimedTranscript t;
        const Tensor2 e = random_matrix(1, cfg.dim, rng);
        t.embedding = e.v;
        t.start_s = static_cast<double>(i) * cfg.n_frames / cfg.k_transcripts;
        t.end_s = static_cast<double>(i + 1) * cfg.n_frames / cfg.k_transcripts;
        transcripts.push_back(std::move(t));
    }
    const Tensor2 expanded = expand_transcripts(transcripts, cfg.n_frames, cfg.dim);
    std::vector<Real> target(static_cast<std::size_t>(cfg.n_frames));
    for (Real& x : target) x = static_cast<Real>(rng.index(2));

    ModelParams params = init_params(model_cfg, cfg.seed);

    const auto eval_loss = [&](const ModelParams& p) {
        Graph g(false);
        const int scores = forward_graph(g, p, frames, script, expanded);
        return static_cast<double>(g.value(g.bce_loss(scores, target)).v[0]);
    };

    Graph g(true);
    const int scores = forward_graph(g, params, frames, script, expanded);
    const int loss_node = g.bce_loss(scores, target);
    GradCheckReport report;
    report.loss = static_cast<double>(g.value(loss_node).v[0]);
    std::map<std::string, Tensor2> analytic = g.backward(loss_node);
    if (cfg.corrupt) {
        analytic.at("head.w").v[0] += Real(0.01);
    }

    const double h = cfg.step;
    for_each_param(params, [&](const std::string& name, Tensor2& theta) {
        const Tensor2& a = analytic.at(name);
        GradCheckTensorReport tr;
        tr.name = name;
        tr.entries = static_cast<int>(theta.size());
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const Real saved = theta.v[i];
            theta.v[i] = static_cast<Real>(static_cast<double>(saved) + h);
            const double up = eval_loss(params);
            theta.v[i] = static_cast<Real>(static_cast<double>(saved) - h);
            const double down = eval_loss(params);
            theta.v[i] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double an = static_cast<double>(a.v[i]);
            const double abs_err = std::abs(an - fd);
            tr.max_rel = std::max(tr.max_rel, guarded_rel(an, fd));
            tr.max_abs = std::max(tr.max_abs, abs_err);
            if (std::abs(an) + std::abs(fd) > 1e-2) {
                tr.strong_rel =
                    std::max(tr.strong_rel, abs_err / (std::abs(an) + std::abs(fd)));
            } else {
                tr.weak_abs = std::max(tr.weak_abs, abs_err);
            }
        }
        report.worst_rel = std::max(report.worst_rel, tr.max_rel);
        report.tensors.push_back(std::move(tr));
    });
    return report;
}

VSUM_NS_END
