#pragma once

#include <string>
#include <vector>

#include "vsum/graph.hpp"

VSUM_NS_BEGIN

// Multi-head attention weights. Queries project through wq, keys/values
// through wk/wv (one D x D/H matrix per head, no biases); head outputs are
// concatenated and mixed by wo (D x D, no bias).
struct WcaParams {
    std::vector<Tensor2> wq, wk, wv;
    Tensor2 wo;

    int heads() const { return static_cast<int>(wq.size()); }
    int dim() const { return wo.rows; }
    void validate() const;
};

// How attention logits are scaled before the softmax: elementwise by the
// cosine-similarity matrix of the raw paired embeddings, or by the
// conventional fixed 1/sqrt(D/H) factor.
enum class AttentionScaling { kSimilarity, kInverseSqrtHead };

struct ForwardStats {
    int similarity_evaluations = 0;
};

// Cosine similarity of every query row against every key row; zero rows
// yield zero entries and all values are clamped into [-1, 1].
Tensor2 cosine_similarity(const Tensor2& queries_raw, const Tensor2& keys_raw);

// Interleaved sine/cosine positional encoding; row 0 is [0,1,0,1,...].
Tensor2 sinusoidal_pe(int n_positions, int dim);

// Records a multi-head attention block on the tape and returns the output
// node (N x D). With kSimilarity scaling the logits of every head are
// multiplied elementwise by the shared similarity matrix computed from the
// raw (pre-projection) inputs; similarity_override substitutes that matrix
// (test seam). pe_node < 0 skips the positional-encoding add.
int wca_forward_graph(Graph& g, const WcaParams& params, const std::string& prefix,
                      int queries_raw, int keys_raw, int pe_node, AttentionScaling scaling,
                      ForwardStats* stats = nullptr,
                      const Tensor2* similarity_override = nullptr);

// Eager one-shot evaluation of the block above.
Tensor2 wca_forward(const WcaParams& params, const Tensor2& queries_raw, const Tensor2& keys_raw,
                    const Tensor2& pe, AttentionScaling scaling = AttentionScaling::kSimilarity,
                    ForwardStats* stats = nullptr, const Tensor2* similarity_override = nullptr);

VSUM_NS_END
