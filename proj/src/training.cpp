#include "vsum/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "vsum/log.hpp"

VSUM_NS_BEGIN

namespace {

using nlohmann::json;

struct Sample {
    int video = -1;
    int script = -1;
    int gt = -1;
};

std::vector<Sample> collect_samples(const Corpus& corpus, const std::vector<std::string>& split,
                                    const char* split_name) {
    if (split.empty()) {
        throw ValidationError(std::string("training requires a non-empty ") + split_name +
                              " split");
    }
    std::vector<Sample> samples;
    for (const std::string& id : split) {
        const int v = corpus.video_index(id);
        if (v < 0) {
            throw ValidationError(std::string(split_name) + " split names unknown video '" + id +
                                  "'");
        }
        for (int s : corpus.scripts_of_video(v)) {
            const int g = corpus.gt_index_of_script(corpus.scripts[static_cast<std::size_t>(s)].id);
            if (g >= 0) samples.push_back({v, s, g});
        }
    }
    if (samples.empty()) {
        throw ValidationError(std::string(split_name) +
                              " split has no (video, script, ground-truth) sample");
    }
    return samples;
}

std::vector<Real> sample_target(const Corpus& corpus, const Sample& s, LossKind loss) {
    const GroundTruth& gt = corpus.ground_truths[static_cast<std::size_t>(s.gt)];
    if (loss == LossKind::kMse) {
        if (!gt.importance) {
            throw ValidationError("MSE training needs importance scores, ground truth of script '" +
                                  gt.script_id + "' has none");
        }
        return *gt.importance;
    }
    std::vector<Real> target(gt.mask.size());
    for (std::size_t i = 0; i < gt.mask.size(); ++i) target[i] = gt.mask[i] ? Real(1) : Real(0);
    return target;
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (!(lr > 0)) throw ConfigError("learning rate must be positive");
    if (weight_decay < 0) throw ConfigError("weight decay must be >= 0");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    model.validate();
}

AdamState init_adam(const ModelParams& params) {
    AdamState state;
    for_each_param(params, [&state](const std::string& name, const Tensor2& t) {
        state.m.emplace(name, Tensor2(t.rows, t.cols));
        state.v.emplace(name, Tensor2(t.rows, t.cols));
    });
    return state;
}

void adam_step(ModelParams& params, const std::map<std::string, Tensor2>& grads, AdamState& state,
               double lr, double weight_decay) {
    ++state.step;
    const double bc1 = 1.0 - std::pow(AdamState::kBeta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(AdamState::kBeta2, static_cast<double>(state.step));
    for_each_param(params, [&](const std::string& name, Tensor2& theta) {
        const auto git = grads.find(name);
        if (git == grads.end()) {
            throw StateError("adam_step: no gradient for parameter '" + name + "'");
        }
        const Tensor2& g = git->second;
        Tensor2& m = state.m.at(name);
        Tensor2& v = state.v.at(name);
        if (!g.same_shape(theta) || !m.same_shape(theta)) {
            throw DimensionError("adam_step: shape mismatch for parameter '" + name + "'");
        }
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double grad = static_cast<double>(g.v[i]) +
                                weight_decay * static_cast<double>(theta.v[i]);
            const double mi = AdamState::kBeta1 * static_cast<double>(m.v[i]) +
                              (1.0 - AdamState::kBeta1) * grad;
            const double vi = AdamState::kBeta2 * static_cast<double>(v.v[i]) +
                              (1.0 - AdamState::kBeta2) * grad * grad;
            m.v[i] = static_cast<Real>(mi);
            v.v[i] = static_cast<Real>(vi);
            const double m_hat = mi / bc1;
            const double v_hat = vi / bc2;
            theta.v[i] = static_cast<Real>(static_cast<double>(theta.v[i]) -
                                           lr * m_hat / (std::sqrt(v_hat) + AdamState::kEps));
        }
    });
}

TrainResult train(const Corpus& corpus, const TrainConfig& cfg) {
    cfg.validate();
    if (cfg.model.dim != corpus.dim) {
        throw ConfigError("model dimension " + std::to_string(cfg.model.dim) +
                          " does not match corpus dimension " + std::to_string(corpus.dim));
    }
    if (cfg.loss == LossKind::kMse && !corpus.importance_annotated) {
        throw ValidationError("MSE training needs an importance-annotated corpus");
    }

    std::vector<Sample> samples = collect_samples(corpus, corpus.split_train, "train");
    collect_samples(corpus, corpus.split_val, "val");  // presence check up front

    ModelParams params = init_params(cfg.model, cfg.seed);
    AdamState adam = init_adam(params);
    Rng loop_rng(cfg.seed + 1);

    TrainResult result;
    result.best_params = params;
    result.best_meta = {cfg.seed, 0, -1.0};

    EvalOptions val_opts;
    val_opts.video_ids = corpus.split_val;
    val_opts.threads = cfg.threads;

    std::map<std::string, Tensor2> grad_sum;
    for_each_param(params, [&grad_sum](const std::string& name, const Tensor2& t) {
        grad_sum.emplace(name, Tensor2(t.rows, t.cols));
    });
    const auto flush_batch = [&](int batch_count) {
        if (batch_count == 0) return;
        const Real inv = Real(1) / static_cast<Real>(batch_count);
        for (auto& kv : grad_sum) {
            for (Real& x : kv.second.v) x *= inv;
        }
        adam_step(params, grad_sum, adam, cfg.lr, cfg.weight_decay);
        for (auto& kv : grad_sum) {
            std::fill(kv.second.v.begin(), kv.second.v.end(), Real(0));
        }
    };

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        loop_rng.shuffle(samples);
        double loss_sum = 0;
        int batch_count = 0;
        for (const Sample& s : samples) {
            const VideoRecord& video = corpus.videos[static_cast<std::size_t>(s.video)];
            const ScriptRecord& script = corpus.scripts[static_cast<std::size_t>(s.script)];
            const std::vector<Real> target = sample_target(corpus, s, cfg.loss);

            Graph g(true);
            ForwardOptions fwd;
            fwd.training = true;
            fwd.rng = &loop_rng;
            const int scores =
                forward_graph(g, params, video.frames, script.sentences, video.transcripts_expanded, fwd);
            const int loss_node = cfg.loss == LossKind::kBce ? g.bce_loss(scores, target)
                                                             : g.mse_loss(scores, target);
            const double loss = static_cast<double>(g.value(loss_node).v[0]);
            if (!std::isfinite(loss)) {
                throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                                   " on video '" + video.id + "' (non-finite loss)");
            }
            loss_sum += loss;
            std::map<std::string, Tensor2> grads = g.backward(loss_node);
            for (auto& [name, acc] : grad_sum) {
                const Tensor2& sample_grad = grads.at(name);
                for (std::size_t i = 0; i < acc.size(); ++i) acc.v[i] += sample_grad.v[i];
            }
            if (++batch_count == cfg.batch_size) {
                flush_batch(batch_count);
                batch_count = 0;
            }
        }
        flush_batch(batch_count);

        const ModelScorer scorer(params);
        const EvalReport report = corpus.importance_annotated
                                      ? eval_single_gt(scorer, corpus, val_opts)
                                      : eval_multi_gt(scorer, corpus, val_opts);

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(samples.size());
        stats.val_f = report.mean_f;
        stats.val_tau = report.mean_tau;
        stats.val_rho = report.mean_rho;
        result.history.push_back(stats);
        log_info("epoch " + std::to_string(epoch) + ": train loss " +
                 std::to_string(stats.train_loss) + ", val F " + std::to_string(100.0 * stats.val_f));

        if (stats.val_f > result.best_meta.metric) {
            result.best_params = params;
            result.best_meta = {cfg.seed, epoch, stats.val_f};
        }
    }
    return result;
}

std::string history_jsonl(const std::vector<EpochStats>& history) {
    std::string out;
    for (const EpochStats& e : history) {
        json j;
        j["epoch"] = e.epoch;
        j["train_loss"] = e.train_loss;
        j["val_f"] = e.val_f;
        j["val_tau"] = e.val_tau ? json(*e.val_tau) : json(nullptr);
        j["val_rho"] = e.val_rho ? json(*e.val_rho) : json(nullptr);
        out += j.dump();
        out += "\n";
    }
    return out;
}

void write_history(const std::filesystem::path& path, const std::vector<EpochStats>& history) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open for writing: " + path.string());
    }
    out << history_jsonl(history);
}

VSUM_NS_END
