#include "vsum/attention.hpp"

#include <cmath>

VSUM_NS_BEGIN

void WcaParams::validate() const {
    const int h = heads();
    if (h < 1 || static_cast<int>(wk.size()) != h || static_cast<int>(wv.size()) != h) {
        throw DimensionError("attention params: wq/wk/wv head counts differ");
    }
    const int d = dim();
    if (d < 1 || wo.cols != d) {
        throw DimensionError("attention params: wo must be DxD, got " + wo.shape_str());
    }
    if (d % h != 0) {
        throw DimensionError("attention params: dim " + std::to_string(d) +
                             " not divisible by " + std::to_string(h) + " heads");
    }
    const int dh = d / h;
    for (int i = 0; i < h; ++i) {
        for (const Tensor2* w : {&wq[i], &wk[i], &wv[i]}) {
            if (w->rows != d || w->cols != dh) {
                throw DimensionError("attention params: head projection must be " +
                                     std::to_string(d) + "x" + std::to_string(dh) + ", got " +
                                     w->shape_str());
            }
        }
    }
}

Tensor2 cosine_similarity(const Tensor2& queries_raw, const Tensor2& keys_raw) {
    if (queries_raw.cols != keys_raw.cols) {
        throw DimensionError(shape_mismatch_msg("cosine_similarity", queries_raw, keys_raw));
    }
    Tensor2 s = matmul_nt(l2_normalize_rows(queries_raw), l2_normalize_rows(keys_raw));
    for (Real& x : s.v) {
        if (x > Real(1)) x = Real(1);
        if (x < Real(-1)) x = Real(-1);
    }
    return s;
}

Tensor2 sinusoidal_pe(int n_positions, int dim) {
    if (dim % 2 != 0) {
        throw DimensionError("positional encoding needs an even dimension, got " +
                             std::to_string(dim));
    }
    Tensor2 pe(n_positions, dim);
    for (int pos = 0; pos < n_positions; ++pos) {
        for (int i = 0; i < dim; i += 2) {
            const double freq = std::pow(10000.0, static_cast<double>(i) / dim);
            const double angle = pos / freq;
            pe.at(pos, i) = static_cast<Real>(std::sin(angle));
            pe.at(pos, i + 1) = static_cast<Real>(std::cos(angle));
        }
    }
    return pe;
}

int wca_forward_graph(Graph& g, const WcaParams& params, const std::string& prefix,
                      int queries_raw, int keys_raw, int pe_node, AttentionScaling scaling,
                      ForwardStats* stats, const Tensor2* similarity_override) {
    params.validate();
    const int h = params.heads();
    const int dh = params.dim() / h;

    int similarity_node = -1;
    if (scaling == AttentionScaling::kSimilarity) {
        if (similarity_override) {
            similarity_node = g.input(*similarity_override);
        } else {
            similarity_node = g.input(cosine_similarity(g.value(queries_raw), g.value(keys_raw)));
            if (stats) ++stats->similarity_evaluations;
        }
    }

    int concat = -1;
    for (int i = 0; i < h; ++i) {
        const int q = g.matmul(queries_raw, g.param(prefix + ".h" + std::to_string(i) + ".wq",
                                                    params.wq[static_cast<std::size_t>(i)]));
        const int k = g.matmul(keys_raw, g.param(prefix + ".h" + std::to_string(i) + ".wk",
                                                 params.wk[static_cast<std::size_t>(i)]));
        const int v = g.matmul(keys_raw, g.param(prefix + ".h" + std::to_string(i) + ".wv",
                                                 params.wv[static_cast<std::size_t>(i)]));
        int logits = g.matmul_nt(q, k);
        if (scaling == AttentionScaling::kSimilarity) {
            // dynamic rescaling by the raw-embedding similarity, shared by
            // every head; no fixed 1/sqrt(D/H) factor in this mode
            logits = g.elementwise_mul(logits, similarity_node);
        } else {
            logits = g.scale(logits, Real(1) / std::sqrt(static_cast<Real>(dh)));
        }
        const int head_out = g.matmul(g.softmax_rows(logits), v);
        concat = (i == 0) ? head_out : g.concat_cols(concat, head_out);
    }
    int out = g.matmul(concat, g.param(prefix + ".wo", params.wo));
    if (pe_node >= 0) {
        out = g.add(out, pe_node);
    }
    return out;
}

Tensor2 wca_forward(const WcaParams& params, const Tensor2& queries_raw, const Tensor2& keys_raw,
                    const Tensor2& pe, AttentionScaling scaling, ForwardStats* stats,
                    const Tensor2* similarity_override) {
    Graph g(false);
    const int q = g.input_ref(queries_raw);
    const int k = g.input_ref(keys_raw);
    const int p = g.input_ref(pe);
    const int out =
        wca_forward_graph(g, params, "wca", q, k, p, scaling, stats, similarity_override);
    return g.value(out);
}

VSUM_NS_END
