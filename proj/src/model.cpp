#include "vsum/model.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "vsum/sdmv.hpp"

VSUM_NS_BEGIN

namespace {

using nlohmann::json;

constexpr const char* kCheckpointManifest = "checkpoint.json";

Tensor2 xavier_uniform(int fan_in, int fan_out, Rng& rng) {
    const Real bound =
        static_cast<Real>(std::sqrt(2.0) * std::sqrt(6.0 / (fan_in + fan_out)));
    Tensor2 w(fan_in, fan_out);
    for (Real& x : w.v) {
        x = rng.uniform(-bound, bound);
    }
    return w;
}

WcaParams init_attention(int dim, int heads, Rng& rng) {
    WcaParams p;
    const int dh = dim / heads;
    for (int h = 0; h < heads; ++h) {
        p.wq.push_back(xavier_uniform(dim, dh, rng));
        p.wk.push_back(xavier_uniform(dim, dh, rng));
        p.wv.push_back(xavier_uniform(dim, dh, rng));
    }
    p.wo = xavier_uniform(dim, dim, rng);
    return p;
}

void visit_attention(const std::string& prefix, const WcaParams& p,
                     const std::function<void(const std::string&, const Tensor2&)>& fn) {
    for (int h = 0; h < p.heads(); ++h) {
        const std::string hp = prefix + ".h" + std::to_string(h);
        fn(hp + ".wq", p.wq[static_cast<std::size_t>(h)]);
        fn(hp + ".wk", p.wk[static_cast<std::size_t>(h)]);
        fn(hp + ".wv", p.wv[static_cast<std::size_t>(h)]);
    }
    fn(prefix + ".wo", p.wo);
}

}  // namespace

void ModelConfig::validate() const {
    if (dim < 2 || dim % 2 != 0) {
        throw ConfigError("model dim must be even and >= 2, got " + std::to_string(dim));
    }
    if (heads < 1 || dim % heads != 0) {
        throw ConfigError("model dim " + std::to_string(dim) + " must be divisible by " +
                          std::to_string(heads) + " heads");
    }
    if (!(dropout_rate >= Real(0) && dropout_rate < Real(1))) {
        throw ConfigError("dropout rate must be in [0, 1)");
    }
    if (scorer_layers < 1) {
        throw ConfigError("scorer needs at least one encoder layer");
    }
    if (scorer_ffn_dim < 0) {
        throw ConfigError("scorer ffn dim must be positive (or 0 for the 4*dim default)");
    }
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(seed);
    const int d = config.dim;

    ModelParams p;
    p.config = config;
    p.wca_visual = init_attention(d, config.heads, rng);
    if (config.use_transcript_branch) {
        p.wca_transcript = init_attention(d, config.heads, rng);
    }
    const int reduce_in = config.use_transcript_branch ? 2 * d : d;
    p.reduce_w = xavier_uniform(reduce_in, d, rng);
    p.reduce_b = Tensor2(1, d, Real(0.1));
    p.norm_gain = Tensor2(1, d, Real(1));
    p.norm_bias = Tensor2(1, d, Real(0));
    for (int l = 0; l < config.scorer_layers; ++l) {
        EncoderLayerParams layer;
        layer.attn = init_attention(d, config.heads, rng);
        layer.ln1_gain = Tensor2(1, d, Real(1));
        layer.ln1_bias = Tensor2(1, d, Real(0));
        layer.ffn_w1 = xavier_uniform(d, config.ffn_dim(), rng);
        layer.ffn_b1 = Tensor2(1, config.ffn_dim(), Real(0.1));
        layer.ffn_w2 = xavier_uniform(config.ffn_dim(), d, rng);
        layer.ffn_b2 = Tensor2(1, d, Real(0.1));
        layer.ln2_gain = Tensor2(1, d, Real(1));
        layer.ln2_bias = Tensor2(1, d, Real(0));
        p.scorer.push_back(std::move(layer));
    }
    p.head_w = xavier_uniform(d, 1, rng);
    p.head_b = Tensor2(1, 1, Real(0.1));
    return p;
}

void for_each_param(const ModelParams& params,
                    const std::function<void(const std::string&, const Tensor2&)>& fn) {
    visit_attention("wca_v", params.wca_visual, fn);
    if (params.config.use_transcript_branch) {
        visit_attention("wca_t", params.wca_transcript, fn);
    }
    fn("reduce.w", params.reduce_w);
    fn("reduce.b", params.reduce_b);
    fn("norm.gain", params.norm_gain);
    fn("norm.bias", params.norm_bias);
    for (std::size_t l = 0; l < params.scorer.size(); ++l) {
        const std::string lp = "scorer.l" + std::to_string(l);
        const EncoderLayerParams& layer = params.scorer[l];
        visit_attention(lp + ".attn", layer.attn, fn);
        fn(lp + ".ln1.gain", layer.ln1_gain);
        fn(lp + ".ln1.bias", layer.ln1_bias);
        fn(lp + ".ffn.w1", layer.ffn_w1);
        fn(lp + ".ffn.b1", layer.ffn_b1);
        fn(lp + ".ffn.w2", layer.ffn_w2);
        fn(lp + ".ffn.b2", layer.ffn_b2);
        fn(lp + ".ln2.gain", layer.ln2_gain);
        fn(lp + ".ln2.bias", layer.ln2_bias);
    }
    fn("head.w", params.head_w);
    fn("head.b", params.head_b);
}

void for_each_param(ModelParams& params,
                    const std::function<void(const std::string&, Tensor2&)>& fn) {
    for_each_param(static_cast<const ModelParams&>(params),
                   [&fn](const std::string& name, const Tensor2& t) {
                       fn(name, const_cast<Tensor2&>(t));
                   });
}

std::size_t count_params(const ModelParams& params) {
    std::size_t total = 0;
    for_each_param(params,
                   [&total](const std::string&, const Tensor2& t) { total += t.size(); });
    return total;
}

int forward_graph(Graph& g, const ModelParams& params, const Tensor2& frames,
                  const Tensor2& script, const Tensor2& transcripts_expanded,
                  const ForwardOptions& opts) {
    const ModelConfig& cfg = params.config;
    cfg.validate();
    const int n = frames.rows;
    const int d = cfg.dim;
    if (n < 1) {
        throw DimensionError("forward: video has no frames");
    }
    if (frames.cols != d) {
        throw DimensionError("forward: frames have dimension " + std::to_string(frames.cols) +
                             ", model dimension is " + std::to_string(d));
    }
    if (script.rows < 1 || script.cols != d) {
        throw DimensionError("forward: script must be Mx" + std::to_string(d) + " with M >= 1, got " +
                             script.shape_str());
    }
    if (opts.training && cfg.dropout_rate > Real(0) && opts.rng == nullptr) {
        throw StateError("training forward needs an rng for dropout");
    }

    const AttentionScaling scaling = cfg.use_similarity_scaling
                                         ? AttentionScaling::kSimilarity
                                         : AttentionScaling::kInverseSqrtHead;
    const int pe = g.input(sinusoidal_pe(n, d));
    const int x = g.input_ref(frames);
    const int y = g.input_ref(script);

    const int z_visual =
        wca_forward_graph(g, params.wca_visual, "wca_v", x, y, pe, scaling, opts.stats);
    int z = z_visual;
    if (cfg.use_transcript_branch) {
        if (transcripts_expanded.rows != n || transcripts_expanded.cols != d) {
            throw DimensionError("forward: expanded transcripts must be " + std::to_string(n) +
                                 "x" + std::to_string(d) + ", got " +
                                 transcripts_expanded.shape_str());
        }
        const int t = g.input_ref(transcripts_expanded);
        const int z_transcript =
            wca_forward_graph(g, params.wca_transcript, "wca_t", t, y, pe, scaling, opts.stats);
        z = g.concat_cols(z_visual, z_transcript);
    }

    int r = g.add_broadcast(g.matmul(z, g.param("reduce.w", params.reduce_w)),
                            g.param("reduce.b", params.reduce_b));
    if (opts.training && cfg.dropout_rate > Real(0)) {
        r = g.dropout(r, cfg.dropout_rate, *opts.rng, true);
    }
    r = g.layer_norm_rows(r, g.param("norm.gain", params.norm_gain),
                          g.param("norm.bias", params.norm_bias));

    for (std::size_t l = 0; l < params.scorer.size(); ++l) {
        const std::string lp = "scorer.l" + std::to_string(l);
        const EncoderLayerParams& layer = params.scorer[l];
        const int attn = wca_forward_graph(g, layer.attn, lp + ".attn", r, r, -1,
                                           AttentionScaling::kInverseSqrtHead);
        r = g.layer_norm_rows(g.add(r, attn), g.param(lp + ".ln1.gain", layer.ln1_gain),
                              g.param(lp + ".ln1.bias", layer.ln1_bias));
        const int hidden = g.relu(g.add_broadcast(
            g.matmul(r, g.param(lp + ".ffn.w1", layer.ffn_w1)),
            g.param(lp + ".ffn.b1", layer.ffn_b1)));
        const int ffn = g.add_broadcast(
            g.matmul(hidden, g.param(lp + ".ffn.w2", layer.ffn_w2)),
            g.param(lp + ".ffn.b2", layer.ffn_b2));
        r = g.layer_norm_rows(g.add(r, ffn), g.param(lp + ".ln2.gain", layer.ln2_gain),
                              g.param(lp + ".ln2.bias", layer.ln2_bias));
    }

    return g.sigmoid(g.add_broadcast(g.matmul(r, g.param("head.w", params.head_w)),
                                     g.param("head.b", params.head_b)));
}

std::vector<Real> forward(const ModelParams& params, const Tensor2& frames,
                          const Tensor2& script, const Tensor2& transcripts_expanded,
                          const ForwardOptions& opts) {
    Graph g(false);
    const int scores = forward_graph(g, params, frames, script, transcripts_expanded, opts);
    return g.value(scores).v;
}

void save_checkpoint(const std::filesystem::path& dir, const ModelParams& params,
                     const CheckpointMeta& meta) {
    params.config.validate();
    std::filesystem::create_directories(dir / "params");
    json manifest;
    manifest["format"] = "vsum-checkpoint";
    manifest["version"] = 1;
    manifest["seed"] = meta.seed;
    manifest["epoch"] = meta.epoch;
    manifest["metric"] = meta.metric;
    json jc;
    jc["dim"] = params.config.dim;
    jc["heads"] = params.config.heads;
    jc["use_transcript_branch"] = params.config.use_transcript_branch;
    jc["use_similarity_scaling"] = params.config.use_similarity_scaling;
    jc["dropout_rate"] = static_cast<double>(params.config.dropout_rate);
    jc["scorer_layers"] = params.config.scorer_layers;
    jc["scorer_ffn_dim"] = params.config.scorer_ffn_dim;
    manifest["config"] = std::move(jc);
    json jp;
    for_each_param(params, [&](const std::string& name, const Tensor2& t) {
        const std::string rel = "params/" + name + ".sdmv";
        write_sdmv(dir / rel, t);
        jp[name] = rel;
    });
    manifest["params"] = std::move(jp);
    std::ofstream out(dir / kCheckpointManifest);
    if (!out) {
        throw IoError("cannot open for writing: " + (dir / kCheckpointManifest).string());
    }
    out << manifest.dump(2) << "\n";
}

std::pair<ModelParams, CheckpointMeta> load_checkpoint(const std::filesystem::path& dir) {
    const std::filesystem::path manifest_path = dir / kCheckpointManifest;
    std::ifstream in(manifest_path);
    if (!in) {
        throw IoError("cannot open: " + manifest_path.string());
    }
    json manifest;
    try {
        manifest = json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError("invalid JSON in " + manifest_path.string() + ": " + e.what());
    }
    if (manifest.value("format", "") != "vsum-checkpoint") {
        throw FormatError("not a checkpoint manifest: " + manifest_path.string());
    }

    ModelConfig cfg;
    const json& jc = manifest.at("config");
    cfg.dim = jc.at("dim").get<int>();
    cfg.heads = jc.at("heads").get<int>();
    cfg.use_transcript_branch = jc.at("use_transcript_branch").get<bool>();
    cfg.use_similarity_scaling = jc.at("use_similarity_scaling").get<bool>();
    cfg.dropout_rate = static_cast<Real>(jc.at("dropout_rate").get<double>());
    cfg.scorer_layers = jc.at("scorer_layers").get<int>();
    cfg.scorer_ffn_dim = jc.at("scorer_ffn_dim").get<int>();

    CheckpointMeta meta;
    meta.seed = manifest.at("seed").get<std::uint64_t>();
    meta.epoch = manifest.at("epoch").get<int>();
    meta.metric = manifest.at("metric").get<double>();

    // shapes come from the config; the stored tensors must agree
    ModelParams params = init_params(cfg, 0);
    const json& jp = manifest.at("params");
    for_each_param(params, [&](const std::string& name, Tensor2& t) {
        if (!jp.contains(name)) {
            throw FormatError("checkpoint misses parameter '" + name + "': " +
                              manifest_path.string());
        }
        Tensor2 loaded = read_sdmv(dir / jp.at(name).get<std::string>());
        if (!loaded.same_shape(t)) {
            throw FormatError("checkpoint parameter '" + name + "' has shape " +
                              loaded.shape_str() + ", expected " + t.shape_str());
        }
        t = std::move(loaded);
    });
    return {std::move(params), meta};
}

VSUM_NS_END
