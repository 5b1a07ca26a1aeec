#include "vsum/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vsum/selection.hpp"

VSUM_NS_BEGIN

namespace {

std::vector<Real> random_unit(int dim, Rng& rng) {
    std::vector<Real> v(static_cast<std::size_t>(dim));
    double norm = 0;
    do {
        norm = 0;
        for (Real& x : v) {
            x = static_cast<Real>(rng.normal());
            norm += static_cast<double>(x) * static_cast<double>(x);
        }
    } while (norm == 0);
    const Real inv = static_cast<Real>(1.0 / std::sqrt(norm));
    for (Real& x : v) x *= inv;
    return v;
}

// Unit vector with exact cosine `strength` against the unit vector y:
// strength * y + sqrt(1 - strength^2) * (unit normal component).
std::vector<Real> planted_vector(const std::vector<Real>& y, double strength, Rng& rng) {
    if (strength >= 1.0) return y;
    const int dim = static_cast<int>(y.size());
    for (;;) {
        std::vector<Real> n = random_unit(dim, rng);
        double dot = 0;
        for (int i = 0; i < dim; ++i) {
            dot += static_cast<double>(n[static_cast<std::size_t>(i)]) *
                   static_cast<double>(y[static_cast<std::size_t>(i)]);
        }
        double norm = 0;
        for (int i = 0; i < dim; ++i) {
            const double r = static_cast<double>(n[static_cast<std::size_t>(i)]) -
                             dot * static_cast<double>(y[static_cast<std::size_t>(i)]);
            n[static_cast<std::size_t>(i)] = static_cast<Real>(r);
            norm += r * r;
        }
        if (norm == 0) continue;  // drew a vector parallel to y; retry
        const double ortho = std::sqrt(1.0 - strength * strength) / std::sqrt(norm);
        std::vector<Real> out(static_cast<std::size_t>(dim));
        for (int i = 0; i < dim; ++i) {
            out[static_cast<std::size_t>(i)] =
                static_cast<Real>(strength * static_cast<double>(y[static_cast<std::size_t>(i)]) +
                                  ortho * static_cast<double>(n[static_cast<std::size_t>(i)]));
        }
        return out;
    }
}

std::vector<Real> smooth_mask(const SummaryMask& mask) {
    const int n = static_cast<int>(mask.size());
    std::vector<Real> imp(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double sum = 0;
        int count = 0;
        for (int j = std::max(0, i - 1); j <= std::min(n - 1, i + 1); ++j) {
            sum += mask[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
            ++count;
        }
        imp[static_cast<std::size_t>(i)] = static_cast<Real>(sum / count);
    }
    return imp;
}

std::string zero_padded(int value, int width) {
    std::string s = std::to_string(value);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

}  // namespace

void SynthSpec::validate() const {
    if (n_videos < 1) throw ConfigError("synth: need at least one video");
    if (frames_min < 1 || frames_max < frames_min) {
        throw ConfigError("synth: invalid frame range [" + std::to_string(frames_min) + ", " +
                          std::to_string(frames_max) + "]");
    }
    if (dim < 2 || dim % 2 != 0) {
        throw ConfigError("synth: dimension must be even and >= 2");
    }
    if (scripts_per_video < 1) throw ConfigError("synth: need at least one script per video");
    if (sentences_per_script < 1) throw ConfigError("synth: need at least one sentence per script");
    if (!(coverage >= 0.0 && coverage <= 1.0)) throw ConfigError("synth: coverage must be in [0, 1]");
    if (!(strength >= 0.0 && strength <= 1.0)) throw ConfigError("synth: strength must be in [0, 1]");
    if (!(summary_fraction > 0.0 && summary_fraction <= 1.0)) {
        throw ConfigError("synth: summary fraction must be in (0, 1]");
    }
    // every script plants one full summary budget; they must fit disjointly
    const int worst_budget = summary_capacity(frames_min, summary_fraction);
    if (scripts_per_video * worst_budget > frames_min) {
        throw ConfigError("synth: " + std::to_string(scripts_per_video) + " scripts x " +
                          std::to_string(worst_budget) + " planted frames exceed the " +
                          std::to_string(frames_min) + "-frame minimum video");
    }
}

Corpus generate_corpus(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    Corpus corpus;
    corpus.dim = spec.dim;
    corpus.importance_annotated = spec.with_importance;

    for (int v = 0; v < spec.n_videos; ++v) {
        const int n = spec.frames_min + static_cast<int>(rng.index(
                          static_cast<std::size_t>(spec.frames_max - spec.frames_min + 1)));
        VideoRecord video;
        video.id = "vid_" + zero_padded(v, 3);
        video.frames = Tensor2(n, spec.dim);
        for (int r = 0; r < n; ++r) {
            const std::vector<Real> row = random_unit(spec.dim, rng);
            std::copy(row.begin(), row.end(),
                      video.frames.v.begin() + static_cast<std::ptrdiff_t>(r) * spec.dim);
        }

        const int budget = summary_capacity(n, spec.summary_fraction);
        if (spec.scripts_per_video * budget > n) {
            throw ConfigError("synth: planted sets need " +
                              std::to_string(spec.scripts_per_video * budget) +
                              " frames, video has " + std::to_string(n));
        }
        std::vector<int> pool(static_cast<std::size_t>(n));
        std::iota(pool.begin(), pool.end(), 0);
        rng.shuffle(pool);
        std::size_t pool_next = 0;

        for (int s = 0; s < spec.scripts_per_video; ++s) {
            ScriptRecord script;
            script.id = video.id + "_scr" + std::to_string(s);
            script.video_id = video.id;
            script.sentences = Tensor2(spec.sentences_per_script, spec.dim);
            std::vector<std::vector<Real>> sentences;
            for (int m = 0; m < spec.sentences_per_script; ++m) {
                sentences.push_back(random_unit(spec.dim, rng));
                std::copy(sentences.back().begin(), sentences.back().end(),
                          script.sentences.v.begin() + static_cast<std::ptrdiff_t>(m) * spec.dim);
            }

            std::vector<int> planted(pool.begin() + static_cast<std::ptrdiff_t>(pool_next),
                                     pool.begin() + static_cast<std::ptrdiff_t>(pool_next + budget));
            pool_next += static_cast<std::size_t>(budget);
            std::sort(planted.begin(), planted.end());

            GroundTruth gt;
            gt.script_id = script.id;
            gt.mask.assign(static_cast<std::size_t>(n), 0);
            const int covered = std::min(
                budget, static_cast<int>(std::ceil(spec.coverage * budget - 1e-9)));
            for (int i = 0; i < budget; ++i) {
                const int frame = planted[static_cast<std::size_t>(i)];
                const std::vector<Real>& y =
                    sentences[static_cast<std::size_t>(i % spec.sentences_per_script)];
                const std::vector<Real> row = planted_vector(y, spec.strength, rng);
                std::copy(row.begin(), row.end(),
                          video.frames.v.begin() + static_cast<std::ptrdiff_t>(frame) * spec.dim);
                gt.mask[static_cast<std::size_t>(frame)] = 1;
                if (i < covered) {
                    TimedTranscript t;
                    t.embedding = y;
                    t.start_s = frame;
                    t.end_s = frame + 1;
                    video.transcripts.push_back(std::move(t));
                }
            }
            if (spec.with_importance) {
                gt.importance = smooth_mask(gt.mask);
            }
            corpus.scripts.push_back(std::move(script));
            corpus.ground_truths.push_back(std::move(gt));
        }

        // planted sets are disjoint, so spans never overlap; sort by start
        std::sort(video.transcripts.begin(), video.transcripts.end(),
                  [](const TimedTranscript& a, const TimedTranscript& b) {
                      return a.start_s < b.start_s;
                  });
        video.transcripts_expanded = expand_transcripts(video.transcripts, n, spec.dim);
        video.fragments = uniform_fragments(n);
        corpus.videos.push_back(std::move(video));
    }

    if (spec.shared_splits) {
        for (const VideoRecord& video : corpus.videos) {
            corpus.split_train.push_back(video.id);
            corpus.split_val.push_back(video.id);
            corpus.split_test.push_back(video.id);
        }
    } else {
        const int n_val = std::max(1, spec.n_videos / 4);
        const int n_test = std::max(1, spec.n_videos / 4);
        if (spec.n_videos - n_val - n_test < 1) {
            throw ConfigError("synth: " + std::to_string(spec.n_videos) +
                              " videos cannot cover disjoint train/val/test splits");
        }
        for (int v = 0; v < spec.n_videos; ++v) {
            const std::string& id = corpus.videos[static_cast<std::size_t>(v)].id;
            if (v < spec.n_videos - n_val - n_test) {
                corpus.split_train.push_back(id);
            } else if (v < spec.n_videos - n_test) {
                corpus.split_val.push_back(id);
            } else {
                corpus.split_test.push_back(id);
            }
        }
    }

    corpus.rebuild_indices();
    return corpus;
}

void generate(const SynthSpec& spec, const std::filesystem::path& dir) {
    write_corpus(dir, generate_corpus(spec));
}

VSUM_NS_END
