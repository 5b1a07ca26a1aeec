#include "vsum/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>
#include <json.hpp>

#include "vsum/log.hpp"
#include "vsum/selection.hpp"

VSUM_NS_BEGIN

namespace {

using nlohmann::json;

// Pairs (i < j) with y[i] > y[j], counted while merge-sorting y. Equal
// elements are kept stable and never counted.
std::int64_t count_inversions(std::vector<double>& y, std::vector<double>& tmp, std::size_t lo,
                              std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::int64_t swaps = count_inversions(y, tmp, lo, mid) + count_inversions(y, tmp, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (y[i] <= y[j]) {
            tmp[k++] = y[i++];
        } else {
            swaps += static_cast<std::int64_t>(mid - i);
            tmp[k++] = y[j++];
        }
    }
    while (i < mid) tmp[k++] = y[i++];
    while (j < hi) tmp[k++] = y[j++];
    std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo), tmp.begin() + static_cast<std::ptrdiff_t>(hi),
              y.begin() + static_cast<std::ptrdiff_t>(lo));
    return swaps;
}

void check_rank_input(const std::vector<double>& a, const std::vector<double>& b,
                      const char* name) {
    if (a.size() != b.size()) {
        throw DimensionError(std::string(name) + ": vectors of length " +
                             std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
    if (a.size() < 2) {
        throw DimensionError(std::string(name) + ": need at least two entries");
    }
}

bool is_constant(const std::vector<double>& a) {
    return std::all_of(a.begin(), a.end(), [&a](double x) { return x == a.front(); });
}

std::vector<double> to_double(const std::vector<Real>& a) {
    return std::vector<double>(a.begin(), a.end());
}

std::vector<double> mask_to_double(const SummaryMask& m) {
    std::vector<double> out(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] ? 1.0 : 0.0;
    return out;
}

}  // namespace

double f_score(const SummaryMask& pred, const SummaryMask& gt) {
    if (pred.size() != gt.size()) {
        throw DimensionError("f_score: masks of length " + std::to_string(pred.size()) + " and " +
                             std::to_string(gt.size()));
    }
    std::int64_t np = 0, ng = 0, overlap = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] != 0, g = gt[i] != 0;
        np += p;
        ng += g;
        overlap += p && g;
    }
    if (np == 0 && ng == 0) return 1.0;
    const double precision = np ? static_cast<double>(overlap) / static_cast<double>(np) : 0.0;
    const double recall = ng ? static_cast<double>(overlap) / static_cast<double>(ng) : 0.0;
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

std::optional<double> kendall_tau(const std::vector<double>& a, const std::vector<double>& b) {
    check_rank_input(a, b, "kendall_tau");
    if (is_constant(a) || is_constant(b)) return std::nullopt;

    const std::size_t n = a.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        if (a[i] != a[j]) return a[i] < a[j];
        return b[i] < b[j];
    });

    // tie counts: n1 over equal a, n2 over equal b, n3 over equal (a, b)
    std::int64_t n1 = 0, n3 = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && a[order[j]] == a[order[i]]) {
            std::size_t k = j;
            while (k < n && a[order[k]] == a[order[j]] && b[order[k]] == b[order[j]]) ++k;
            const std::int64_t t = static_cast<std::int64_t>(k - j);
            n3 += t * (t - 1) / 2;
            j = k;
        }
        const std::int64_t t = static_cast<std::int64_t>(j - i);
        n1 += t * (t - 1) / 2;
        i = j;
    }

    std::vector<double> y(n), tmp(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = b[order[i]];
    const std::int64_t swaps = count_inversions(y, tmp, 0, n);

    std::int64_t n2 = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && y[j] == y[i]) ++j;
        const std::int64_t t = static_cast<std::int64_t>(j - i);
        n2 += t * (t - 1) / 2;
        i = j;
    }

    const std::int64_t n0 = static_cast<std::int64_t>(n) * (static_cast<std::int64_t>(n) - 1) / 2;
    const std::int64_t num = n0 - n1 - n2 + n3 - 2 * swaps;
    const double denom =
        std::sqrt(static_cast<double>(n0 - n1)) * std::sqrt(static_cast<double>(n0 - n2));
    return static_cast<double>(num) / denom;
}

std::vector<double> average_ranks(const std::vector<double>& a) {
    const std::size_t n = a.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&a](std::size_t i, std::size_t j) { return a[i] < a[j]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && a[order[j]] == a[order[i]]) ++j;
        const double mean_rank = static_cast<double>(i + j - 1) / 2.0 + 1.0;
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = mean_rank;
        i = j;
    }
    return ranks;
}

std::optional<double> spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
    check_rank_input(a, b, "spearman_rho");
    if (is_constant(a) || is_constant(b)) return std::nullopt;

    const std::vector<double> ra = average_ranks(a);
    const std::vector<double> rb = average_ranks(b);
    const std::size_t n = ra.size();
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = ra[i] - ma, db = rb[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    return sab / std::sqrt(saa * sbb);
}

std::vector<Real> ModelScorer::score(const VideoRecord& video, const ScriptRecord& script) const {
    return forward(*params_, video.frames, script.sentences, video.transcripts_expanded);
}

namespace {

struct EvalTask {
    int video_idx = -1;
    std::vector<std::pair<int, int>> pairs;  // (script index, ground-truth index)
};

std::vector<int> select_videos(const Corpus& corpus, const EvalOptions& opts) {
    std::vector<int> out;
    if (opts.video_ids.empty()) {
        out.resize(corpus.videos.size());
        std::iota(out.begin(), out.end(), 0);
        return out;
    }
    for (const std::string& id : opts.video_ids) {
        const int idx = corpus.video_index(id);
        if (idx < 0) {
            throw ValidationError("evaluation requested for unknown video '" + id + "'");
        }
        out.push_back(idx);
    }
    return out;
}

std::vector<EvalTask> build_tasks(const Corpus& corpus, const EvalOptions& opts,
                                  EvalReport& report, bool single_gt) {
    std::vector<EvalTask> tasks;
    for (int v : select_videos(corpus, opts)) {
        EvalTask task;
        task.video_idx = v;
        for (int s : corpus.scripts_of_video(v)) {
            const int g = corpus.gt_index_of_script(corpus.scripts[static_cast<std::size_t>(s)].id);
            if (g >= 0) task.pairs.emplace_back(s, g);
        }
        if (task.pairs.empty()) {
            log_warn("video '" + corpus.videos[static_cast<std::size_t>(v)].id +
                     "' has no script with a ground truth; skipped");
            ++report.videos_skipped;
            continue;
        }
        if (single_gt && task.pairs.size() > 1) {
            throw ValidationError("video '" + corpus.videos[static_cast<std::size_t>(v)].id +
                                  "' has " + std::to_string(task.pairs.size()) +
                                  " ground truths; the single-ground-truth protocol expects one");
        }
        tasks.push_back(std::move(task));
    }
    return tasks;
}

void run_tasks(const std::vector<EvalTask>& tasks, int threads,
               const std::function<EvalReport::VideoEntry(const EvalTask&)>& eval_one,
               std::vector<EvalReport::VideoEntry>& results) {
    results.resize(tasks.size());
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(tasks.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) results[i] = eval_one(tasks[i]);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= tasks.size()) return;
                try {
                    results[i] = eval_one(tasks[i]);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

void finish_report(EvalReport& report) {
    report.n_videos = static_cast<int>(report.videos.size());
    double f_sum = 0, tau_sum = 0, rho_sum = 0;
    int ranked = 0;
    for (const EvalReport::VideoEntry& e : report.videos) {
        f_sum += e.f;
        if (e.tau) {
            tau_sum += *e.tau;
            rho_sum += *e.rho;
            ++ranked;
        } else {
            ++report.rank_skipped;
        }
    }
    report.mean_f = report.videos.empty() ? 0.0 : f_sum / static_cast<double>(report.videos.size());
    if (ranked > 0) {
        report.mean_tau = tau_sum / ranked;
        report.mean_rho = rho_sum / ranked;
    }
}

}  // namespace

EvalReport eval_multi_gt(const Scorer& scorer, const Corpus& corpus, const EvalOptions& opts) {
    EvalReport report;
    const std::vector<EvalTask> tasks = build_tasks(corpus, opts, report, false);
    std::vector<EvalReport::VideoEntry> entries;
    run_tasks(tasks, opts.threads, [&](const EvalTask& task) {
        const VideoRecord& video = corpus.videos[static_cast<std::size_t>(task.video_idx)];
        const std::size_t n = static_cast<std::size_t>(video.n_frames());
        EvalReport::VideoEntry entry;
        entry.video_id = video.id;
        std::vector<double> avg_pred(n, 0.0), avg_gt(n, 0.0);
        double f_sum = 0;
        for (const auto& [s, g] : task.pairs) {
            const ScriptRecord& script = corpus.scripts[static_cast<std::size_t>(s)];
            const GroundTruth& gt = corpus.ground_truths[static_cast<std::size_t>(g)];
            const std::vector<Real> scores = scorer.score(video, script);
            if (scores.size() != n) {
                throw DimensionError("scorer returned " + std::to_string(scores.size()) +
                                     " scores for " + std::to_string(n) + " frames of video '" +
                                     video.id + "'");
            }
            f_sum += f_score(top_fraction_select(scores, opts.fraction), gt.mask);
            for (std::size_t i = 0; i < n; ++i) {
                avg_pred[i] += static_cast<double>(scores[i]);
                avg_gt[i] += gt.mask[i] ? 1.0 : 0.0;
            }
        }
        const double k = static_cast<double>(task.pairs.size());
        entry.f = f_sum / k;
        for (std::size_t i = 0; i < n; ++i) {
            avg_pred[i] /= k;
            avg_gt[i] /= k;
        }
        entry.tau = kendall_tau(avg_pred, avg_gt);
        entry.rho = spearman_rho(avg_pred, avg_gt);
        return entry;
    }, entries);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        report.n_pairs += static_cast<int>(tasks[i].pairs.size());
        report.videos.push_back(std::move(entries[i]));
    }
    finish_report(report);
    return report;
}

EvalReport eval_single_gt(const Scorer& scorer, const Corpus& corpus, const EvalOptions& opts) {
    EvalReport report;
    const std::vector<EvalTask> tasks = build_tasks(corpus, opts, report, true);
    std::vector<EvalReport::VideoEntry> entries;
    run_tasks(tasks, opts.threads, [&](const EvalTask& task) {
        const VideoRecord& video = corpus.videos[static_cast<std::size_t>(task.video_idx)];
        const std::size_t n = static_cast<std::size_t>(video.n_frames());
        const auto& [s, g] = task.pairs.front();
        const ScriptRecord& script = corpus.scripts[static_cast<std::size_t>(s)];
        const GroundTruth& gt = corpus.ground_truths[static_cast<std::size_t>(g)];
        const std::vector<Real> scores = scorer.score(video, script);
        if (scores.size() != n) {
            throw DimensionError("scorer returned " + std::to_string(scores.size()) +
                                 " scores for " + std::to_string(n) + " frames of video '" +
                                 video.id + "'");
        }
        EvalReport::VideoEntry entry;
        entry.video_id = video.id;
        const std::vector<Real> frag_values = fragment_scores(scores, video.fragments);
        std::vector<int> weights;
        weights.reserve(video.fragments.size());
        for (const Fragment& f : video.fragments) weights.push_back(f.last - f.first + 1);
        const SummaryMask mask =
            knapsack_select(frag_values, weights, summary_capacity(video.n_frames(), opts.fraction));
        entry.f = f_score(mask, gt.mask);
        if (gt.importance) {
            entry.tau = kendall_tau(to_double(scores), to_double(*gt.importance));
            entry.rho = spearman_rho(to_double(scores), to_double(*gt.importance));
        }
        return entry;
    }, entries);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        report.n_pairs += 1;
        report.videos.push_back(std::move(entries[i]));
    }
    finish_report(report);
    return report;
}

std::string report_json(const EvalReport& report) {
    json j;
    j["n_videos"] = report.n_videos;
    j["n_pairs"] = report.n_pairs;
    j["videos_skipped"] = report.videos_skipped;
    j["rank_skipped"] = report.rank_skipped;
    j["mean_f"] = report.mean_f;
    j["mean_tau"] = report.mean_tau ? json(*report.mean_tau) : json(nullptr);
    j["mean_rho"] = report.mean_rho ? json(*report.mean_rho) : json(nullptr);
    json videos = json::array();
    for (const EvalReport::VideoEntry& e : report.videos) {
        json v;
        v["id"] = e.video_id;
        v["f"] = e.f;
        v["tau"] = e.tau ? json(*e.tau) : json(nullptr);
        v["rho"] = e.rho ? json(*e.rho) : json(nullptr);
        videos.push_back(std::move(v));
    }
    j["videos"] = std::move(videos);
    return j.dump(2) + "\n";
}

std::string report_table(const EvalReport& report) {
    std::size_t id_width = 5;
    for (const EvalReport::VideoEntry& e : report.videos) {
        id_width = std::max(id_width, e.video_id.size());
    }
    std::ostringstream out;
    const auto rank_cell = [&out](const std::optional<double>& x) {
        if (x) {
            out << std::setw(9) << std::fixed << std::setprecision(3) << *x;
        } else {
            out << std::setw(9) << "n/a";
        }
    };
    const auto row = [&](const std::string& id, double f, const std::optional<double>& tau,
                         const std::optional<double>& rho) {
        out << std::left << std::setw(static_cast<int>(id_width)) << id << std::right;
        out << std::setw(8) << std::fixed << std::setprecision(1) << 100.0 * f;
        rank_cell(tau);
        rank_cell(rho);
        out << "\n";
    };
    out << std::left << std::setw(static_cast<int>(id_width)) << "video" << std::right
        << std::setw(8) << "F1" << std::setw(9) << "tau" << std::setw(9) << "rho" << "\n";
    out << std::string(id_width + 26, '-') << "\n";
    for (const EvalReport::VideoEntry& e : report.videos) {
        row(e.video_id, e.f, e.tau, e.rho);
    }
    out << std::string(id_width + 26, '-') << "\n";
    row("mean", report.mean_f, report.mean_tau, report.mean_rho);
    if (report.rank_skipped > 0) {
        out << "(" << report.rank_skipped << " video(s) excluded from tau/rho means)\n";
    }
    return out.str();
}

VSUM_NS_END
