#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>

#include "vsum/attention.hpp"

VSUM_NS_BEGIN

struct ModelConfig {
    int dim = 512;
    int heads = 8;
    // off = ablation that drops the transcript branch entirely
    bool use_transcript_branch = true;
    // off = ablation that replaces similarity scaling by fixed 1/sqrt(D/H)
    bool use_similarity_scaling = true;
    Real dropout_rate = Real(0.5);
    int scorer_layers = 1;
    int scorer_ffn_dim = 0;  // 0 means 4*dim

    int ffn_dim() const { return scorer_ffn_dim > 0 ? scorer_ffn_dim : 4 * dim; }
    void validate() const;
};

struct EncoderLayerParams {
    WcaParams attn;  // standard 1/sqrt(D/H)-scaled self-attention
    Tensor2 ln1_gain, ln1_bias;
    Tensor2 ffn_w1, ffn_b1;  // D -> ffn, ReLU
    Tensor2 ffn_w2, ffn_b2;  // ffn -> D
    Tensor2 ln2_gain, ln2_bias;
};

// All learnable tensors of the scoring network: two cross-modal attention
// branches (query = frames / expanded transcripts, key/value = script),
// feature reduction, dropout + layer norm, Transformer-encoder scorer and
// the sigmoid head producing one importance score per frame.
struct ModelParams {
    ModelConfig config;
    WcaParams wca_visual;
    WcaParams wca_transcript;  // unused when the transcript branch is off
    Tensor2 reduce_w, reduce_b;
    Tensor2 norm_gain, norm_bias;
    std::vector<EncoderLayerParams> scorer;
    Tensor2 head_w, head_b;
};

// Xavier-uniform weights (gain sqrt(2)), linear biases 0.1, layer-norm
// gain 1 / bias 0. The same seed yields bit-identical parameters.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

std::size_t count_params(const ModelParams& params);

// Canonical parameter enumeration; the visit order is fixed and shared by
// the optimizer, gradient maps and checkpoints.
void for_each_param(const ModelParams& params,
                    const std::function<void(const std::string&, const Tensor2&)>& fn);
void for_each_param(ModelParams& params,
                    const std::function<void(const std::string&, Tensor2&)>& fn);

struct ForwardOptions {
    bool training = false;
    Rng* rng = nullptr;  // consumed only when training with dropout > 0
    ForwardStats* stats = nullptr;
};

// Records the full forward pass on the tape and returns the node holding
// the N x 1 score column (values strictly in (0,1)).
int forward_graph(Graph& g, const ModelParams& params, const Tensor2& frames,
                  const Tensor2& script, const Tensor2& transcripts_expanded,
                  const ForwardOptions& opts = {});

std::vector<Real> forward(const ModelParams& params, const Tensor2& frames,
                          const Tensor2& script, const Tensor2& transcripts_expanded,
                          const ForwardOptions& opts = {});

struct CheckpointMeta {
    std::uint64_t seed = 0;
    int epoch = 0;
    double metric = 0;
};

// Checkpoint = manifest JSON + one SDMV file per parameter; write -> read
// -> write is byte-identical.
void save_checkpoint(const std::filesystem::path& dir, const ModelParams& params,
                     const CheckpointMeta& meta);
std::pair<ModelParams, CheckpointMeta> load_checkpoint(const std::filesystem::path& dir);

VSUM_NS_END
