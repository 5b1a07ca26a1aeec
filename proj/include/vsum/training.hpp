#pragma once

#include <map>
#include <optional>

#include "vsum/metrics.hpp"

VSUM_NS_BEGIN

enum class LossKind { kBce, kMse };

struct TrainConfig {
    LossKind loss = LossKind::kBce;
    int epochs = 50;
    // recommended: 4 for multi-ground-truth corpora, 64 for
    // importance-annotated ones; the CLI picks by corpus kind
    int batch_size = 4;
    double lr = 5e-5;
    double weight_decay = 1e-4;
    std::uint64_t seed = 0;
    ModelConfig model;
    int threads = 1;  // read-only validation fan-out

    void validate() const;
};

// Classic Adam moments, keyed by the canonical parameter names.
struct AdamState {
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    std::map<std::string, Tensor2> m, v;
    std::int64_t step = 0;
};

AdamState init_adam(const ModelParams& params);

// Bias-corrected Adam update. L2 regularization enters as
// weight_decay * theta added to the gradient before the moment update
// (coupled, not decoupled decay).
void adam_step(ModelParams& params, const std::map<std::string, Tensor2>& grads, AdamState& state,
               double lr, double weight_decay);

struct EpochStats {
    int epoch = 0;  // 1-based
    double train_loss = 0;
    double val_f = 0;
    std::optional<double> val_tau, val_rho;
};

struct TrainResult {
    ModelParams best_params;
    CheckpointMeta best_meta;
    std::vector<EpochStats> history;
};

// Full training loop: seeded per-epoch shuffle over (video, script,
// ground-truth) samples, gradient accumulation over batch_size per-sample
// passes averaged into one Adam step, per-epoch validation with the
// corpus-appropriate protocol, and retention of the parameters with the
// best validation F (ties keep the earlier epoch). Identical config and
// seed reproduce bit-identical results.
TrainResult train(const Corpus& corpus, const TrainConfig& cfg);

std::string history_jsonl(const std::vector<EpochStats>& history);
void write_history(const std::filesystem::path& path, const std::vector<EpochStats>& history);

VSUM_NS_END
