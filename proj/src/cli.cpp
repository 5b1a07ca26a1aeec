#include "vsum/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>
#include <CLI11.hpp>

#include "vsum/gradcheck_bridge.hpp"
#include "vsum/log.hpp"
#include "vsum/selection.hpp"
#include "vsum/synth.hpp"
#include "vsum/training.hpp"

VSUM_NS_BEGIN

namespace {

namespace fs = std::filesystem;

int default_threads() {
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void apply_variant(ModelConfig& cfg, const std::string& variant) {
    if (variant == "full") return;
    if (variant == "no-transcript") {
        cfg.use_transcript_branch = false;
    } else if (variant == "no-scaling") {
        cfg.use_similarity_scaling = false;
    } else {
        throw ConfigError("unknown variant '" + variant + "'");
    }
}

void check_fraction(double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw ConfigError("fraction must be in (0, 1]");
    }
}

void check_dim(const ModelParams& params, const Corpus& corpus) {
    if (params.config.dim != corpus.dim) {
        throw ValidationError("checkpoint dimension " + std::to_string(params.config.dim) +
                              " does not match corpus dimension " + std::to_string(corpus.dim));
    }
}

bool resolve_single_gt(const std::string& protocol, const Corpus& corpus) {
    if (protocol == "multi-gt") {
        return false;
    }
    if (protocol == "single-gt") {
        if (!corpus.importance_annotated) {
            log_warn("single-gt protocol on a corpus without importance scores; tau/rho "
                     "will be skipped");
        }
        return true;
    }
    return corpus.importance_annotated;
}

struct TrainArgs {
    std::string manifest;
    std::string out = "out";
    std::string loss = "auto";
    int epochs = 50;
    int batch = -1;  // -1: 4 for multi-ground-truth corpora, 64 for importance ones
    double lr = 5e-5;
    double weight_decay = 1e-4;
    double dropout = 0.5;
    int heads = 8;
    int layers = 1;
    int ffn = 0;
    std::string variant = "full";
    std::uint64_t seed = 0;
    int threads = default_threads();
};

int cmd_train(const TrainArgs& a) {
    const Corpus corpus = load_corpus(a.manifest);
    TrainConfig cfg;
    if (a.loss == "auto") {
        cfg.loss = corpus.importance_annotated ? LossKind::kMse : LossKind::kBce;
    } else {
        cfg.loss = a.loss == "mse" ? LossKind::kMse : LossKind::kBce;
    }
    cfg.epochs = a.epochs;
    cfg.batch_size = a.batch > 0 ? a.batch : (corpus.importance_annotated ? 64 : 4);
    cfg.lr = a.lr;
    cfg.weight_decay = a.weight_decay;
    cfg.seed = a.seed;
    cfg.threads = a.threads;
    cfg.model.dim = corpus.dim;
    cfg.model.heads = a.heads;
    cfg.model.dropout_rate = static_cast<Real>(a.dropout);
    cfg.model.scorer_layers = a.layers;
    cfg.model.scorer_ffn_dim = a.ffn;
    apply_variant(cfg.model, a.variant);

    const TrainResult result = train(corpus, cfg);
    const fs::path out(a.out);
    fs::create_directories(out);
    save_checkpoint(out / "checkpoint", result.best_params, result.best_meta);
    write_history(out / "history.jsonl", result.history);
    std::cout << "best epoch " << result.best_meta.epoch << ", validation F "
              << 100.0 * result.best_meta.metric << "\n"
              << "checkpoint: " << (out / "checkpoint").string() << "\n"
              << "history: " << (out / "history.jsonl").string() << "\n";
    return kExitOk;
}

struct SummarizeArgs {
    std::string manifest;
    std::string checkpoint;
    std::string out = "out";
    std::vector<std::string> scripts;
    std::string protocol = "auto";
    double fraction = 0.15;
};

int cmd_summarize(const SummarizeArgs& a) {
    check_fraction(a.fraction);
    const Corpus corpus = load_corpus(a.manifest);
    const auto [params, meta] = load_checkpoint(a.checkpoint);
    check_dim(params, corpus);
    const bool single_gt = resolve_single_gt(a.protocol, corpus);

    std::vector<int> script_indices;
    if (a.scripts.empty()) {
        for (std::size_t i = 0; i < corpus.scripts.size(); ++i) {
            script_indices.push_back(static_cast<int>(i));
        }
    } else {
        for (const std::string& id : a.scripts) {
            const int idx = corpus.script_index(id);
            if (idx < 0) {
                throw ValidationError("unknown script '" + id + "'");
            }
            script_indices.push_back(idx);
        }
    }
    if (script_indices.empty()) {
        throw ValidationError("corpus has no scripts to summarize");
    }

    const fs::path out(a.out);
    fs::create_directories(out);
    const ModelScorer scorer(params);
    for (int idx : script_indices) {
        const ScriptRecord& script = corpus.scripts[static_cast<std::size_t>(idx)];
        const VideoRecord& video =
            corpus.videos[static_cast<std::size_t>(corpus.video_index(script.video_id))];
        const std::vector<Real> scores = scorer.score(video, script);
        SummaryMask mask;
        if (single_gt) {
            std::vector<int> weights;
            for (const Fragment& f : video.fragments) weights.push_back(f.last - f.first + 1);
            mask = knapsack_select(fragment_scores(scores, video.fragments), weights,
                                   summary_capacity(video.n_frames(), a.fraction));
        } else {
            mask = top_fraction_select(scores, a.fraction);
        }
        write_scores(video.id, {scores, video.fragments}, out / (script.id + ".scores.sdmv"));
        write_summary(video.id, mask, out / (script.id + ".summary.json"));
        int selected = 0;
        for (std::uint8_t b : mask) selected += b;
        std::cout << script.id << ": " << selected << "/" << video.n_frames()
                  << " frames selected\n";
    }
    return kExitOk;
}

struct EvaluateArgs {
    std::string manifest;
    std::string checkpoint;
    std::string out = "out";
    std::string split = "test";
    std::string protocol = "auto";
    double fraction = 0.15;
    int threads = default_threads();
};

int cmd_evaluate(const EvaluateArgs& a) {
    check_fraction(a.fraction);
    const Corpus corpus = load_corpus(a.manifest);
    const auto [params, meta] = load_checkpoint(a.checkpoint);
    check_dim(params, corpus);
    const bool single_gt = resolve_single_gt(a.protocol, corpus);

    EvalOptions opts;
    opts.fraction = a.fraction;
    opts.threads = a.threads;
    if (a.split != "all") {
        const std::vector<std::string>* split = nullptr;
        if (a.split == "train") split = &corpus.split_train;
        if (a.split == "val") split = &corpus.split_val;
        if (a.split == "test") split = &corpus.split_test;
        if (!split) {
            throw ConfigError("unknown split '" + a.split + "'");
        }
        if (split->empty()) {
            throw ValidationError("corpus defines no '" + a.split + "' split");
        }
        opts.video_ids = *split;
    }

    const ModelScorer scorer(params);
    const EvalReport report = single_gt ? eval_single_gt(scorer, corpus, opts)
                                        : eval_multi_gt(scorer, corpus, opts);
    const fs::path out(a.out);
    fs::create_directories(out);
    {
        std::ofstream json_out(out / "report.json");
        if (!json_out) throw IoError("cannot open for writing: " + (out / "report.json").string());
        json_out << report_json(report);
    }
    const std::string table = report_table(report);
    {
        std::ofstream table_out(out / "report.txt");
        if (!table_out) throw IoError("cannot open for writing: " + (out / "report.txt").string());
        table_out << table;
    }
    std::cout << table;
    return kExitOk;
}

struct GradcheckArgs {
    int n = 6;
    int m = 3;
    int k = 2;
    int d = 8;
    int heads = 2;
    double step = 1e-5;
    std::uint64_t seed = 0;
    std::string variant = "full";
    bool corrupt = false;
};

int cmd_gradcheck(const GradcheckArgs& a) {
    vsum_bridge::GradCheck64Config cfg;
    cfg.n_frames = a.n;
    cfg.m_sentences = a.m;
    cfg.k_transcripts = a.k;
    cfg.dim = a.d;
    cfg.heads = a.heads;
    cfg.step = a.step;
    cfg.seed = a.seed;
    if (a.variant == "no-transcript") {
        cfg.use_transcript_branch = false;
    } else if (a.variant == "no-scaling") {
        cfg.use_similarity_scaling = false;
    } else if (a.variant != "full") {
        throw ConfigError("unknown variant '" + a.variant + "'");
    }
    cfg.corrupt = a.corrupt;

    const vsum_bridge::GradCheck64Report report = vsum_bridge::gradient_check64(cfg);
    std::printf("gradient check: N=%d M=%d K=%d D=%d H=%d step=%g variant=%s\n", a.n, a.m, a.k,
                a.d, a.heads, a.step, a.variant.c_str());
    std::printf("%-28s %8s %14s %14s\n", "tensor", "entries", "max rel err", "max abs err");
    std::vector<std::string> failing;
    for (const vsum_bridge::GradCheck64Tensor& t : report.tensors) {
        std::printf("%-28s %8d %14.3e %14.3e\n", t.name.c_str(), t.entries, t.max_rel, t.max_abs);
        if (!(t.max_rel < 1e-4)) failing.push_back(t.name);
    }
    std::printf("loss %.6f, worst relative error %.3e (threshold 1e-4)\n", report.loss,
                report.worst_rel);
    if (!failing.empty()) {
        std::string names;
        for (const std::string& n : failing) {
            if (!names.empty()) names += ", ";
            names += n;
        }
        throw NumericError("gradient check failed for: " + names);
    }
    std::printf("PASS\n");
    return kExitOk;
}

struct SynthArgs {
    std::string out;
    SynthSpec spec;
};

int cmd_synth(const SynthArgs& a) {
    generate(a.spec, a.out);
    std::cout << "wrote " << a.spec.n_videos << " videos ("
              << a.spec.n_videos * a.spec.scripts_per_video << " scripts) to " << a.out << "\n";
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"script-driven multimodal video summarization on pre-extracted embeddings"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read defaults from an INI/TOML file (flags win)");

    TrainArgs train_args;
    CLI::App* train_cmd = app.add_subcommand("train", "optimize a model on a corpus");
    train_cmd->add_option("--manifest", train_args.manifest, "corpus manifest JSON")
        ->required()
        ->check(CLI::ExistingFile);
    train_cmd->add_option("--out", train_args.out, "output directory");
    train_cmd->add_option("--loss", train_args.loss, "training objective")
        ->check(CLI::IsMember({"auto", "bce", "mse"}));
    train_cmd->add_option("--epochs", train_args.epochs, "training epochs");
    train_cmd->add_option("--batch", train_args.batch,
                          "samples per optimizer step (default 4, or 64 with importance)");
    train_cmd->add_option("--lr", train_args.lr, "learning rate");
    train_cmd->add_option("--weight-decay", train_args.weight_decay, "L2 factor");
    train_cmd->add_option("--dropout", train_args.dropout, "dropout rate");
    train_cmd->add_option("--heads", train_args.heads, "attention heads");
    train_cmd->add_option("--layers", train_args.layers, "encoder layers in the scorer");
    train_cmd->add_option("--ffn", train_args.ffn, "encoder feed-forward width (0: 4x dim)");
    train_cmd->add_option("--variant", train_args.variant, "architecture variant")
        ->check(CLI::IsMember({"full", "no-transcript", "no-scaling"}));
    train_cmd->add_option("--seed", train_args.seed, "RNG seed");
    train_cmd->add_option("--threads", train_args.threads, "validation worker threads");

    SummarizeArgs sum_args;
    CLI::App* sum_cmd = app.add_subcommand("summarize", "score and select frames per script");
    sum_cmd->add_option("--manifest", sum_args.manifest, "corpus manifest JSON")
        ->required()
        ->check(CLI::ExistingFile);
    sum_cmd->add_option("--checkpoint", sum_args.checkpoint, "checkpoint directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    sum_cmd->add_option("--out", sum_args.out, "output directory");
    sum_cmd->add_option("--script", sum_args.scripts, "script id (repeatable; default: all)");
    sum_cmd->add_option("--protocol", sum_args.protocol, "summary selector")
        ->check(CLI::IsMember({"auto", "multi-gt", "single-gt"}));
    sum_cmd->add_option("--fraction", sum_args.fraction, "summary budget fraction");

    EvaluateArgs eval_args;
    CLI::App* eval_cmd = app.add_subcommand("evaluate", "score a checkpoint against ground truth");
    eval_cmd->add_option("--manifest", eval_args.manifest, "corpus manifest JSON")
        ->required()
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "checkpoint directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--out", eval_args.out, "output directory");
    eval_cmd->add_option("--split", eval_args.split, "video subset to evaluate")
        ->check(CLI::IsMember({"train", "val", "test", "all"}));
    eval_cmd->add_option("--protocol", eval_args.protocol, "evaluation protocol")
        ->check(CLI::IsMember({"auto", "multi-gt", "single-gt"}));
    eval_cmd->add_option("--fraction", eval_args.fraction, "summary budget fraction");
    eval_cmd->add_option("--threads", eval_args.threads, "worker threads over videos");

    GradcheckArgs grad_args;
    CLI::App* grad_cmd =
        app.add_subcommand("gradcheck", "finite-difference check of the analytic gradients");
    grad_cmd->add_option("--n", grad_args.n, "frames");
    grad_cmd->add_option("--m", grad_args.m, "script sentences");
    grad_cmd->add_option("--k", grad_args.k, "transcript spans");
    grad_cmd->add_option("--d", grad_args.d, "embedding dimension");
    grad_cmd->add_option("--heads", grad_args.heads, "attention heads");
    grad_cmd->add_option("--step", grad_args.step, "finite-difference step");
    grad_cmd->add_option("--seed", grad_args.seed, "RNG seed");
    grad_cmd->add_option("--variant", grad_args.variant, "architecture variant")
        ->check(CLI::IsMember({"full", "no-transcript", "no-scaling"}));
    grad_cmd->add_flag("--corrupt", grad_args.corrupt)->group("");  // negative-control hook

    SynthArgs synth_args;
    CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
    synth_cmd->add_option("--out", synth_args.out, "corpus directory")->required();
    synth_cmd->add_option("--videos", synth_args.spec.n_videos, "video count");
    synth_cmd->add_option("--frames-min", synth_args.spec.frames_min, "minimum frames per video");
    synth_cmd->add_option("--frames-max", synth_args.spec.frames_max, "maximum frames per video");
    synth_cmd->add_option("--dim", synth_args.spec.dim, "embedding dimension");
    synth_cmd->add_option("--scripts", synth_args.spec.scripts_per_video, "scripts per video");
    synth_cmd->add_option("--sentences", synth_args.spec.sentences_per_script,
                          "sentences per script");
    synth_cmd->add_option("--coverage", synth_args.spec.coverage, "transcript coverage ratio");
    synth_cmd->add_option("--strength", synth_args.spec.strength, "planted cosine similarity");
    synth_cmd->add_option("--fraction", synth_args.spec.summary_fraction,
                          "summary budget fraction");
    synth_cmd->add_flag("--importance", synth_args.spec.with_importance,
                        "emit smoothed-mask importance scores");
    synth_cmd->add_flag("--shared-splits", synth_args.spec.shared_splits,
                        "train = val = test = all videos");
    synth_cmd->add_option("--seed", synth_args.spec.seed, "RNG seed");

    std::vector<const char*> argv;
    argv.push_back("vsum");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(train_args);
        if (sum_cmd->parsed()) return cmd_summarize(sum_args);
        if (eval_cmd->parsed()) return cmd_evaluate(eval_args);
        if (grad_cmd->parsed()) return cmd_gradcheck(grad_args);
        if (synth_cmd->parsed()) return cmd_synth(synth_args);
        std::cerr << "error: no command given\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
}

VSUM_NS_END
