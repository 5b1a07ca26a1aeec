#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "protocol_fixture.hpp"
#include "test_util.hpp"
#include "vsum/metrics.hpp"
#include "vsum/synth.hpp"

using namespace vsum;

namespace {

// Tie-corrected tau straight from the pair counts, O(n^2).
std::optional<double> naive_tau(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    long long concordant = 0, discordant = 0, ties_a = 0, ties_b = 0, total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            ++total;
            const double da = a[j] - a[i];
            const double db = b[j] - b[i];
            if (da == 0 && db == 0) {
                ++ties_a;
                ++ties_b;
            } else if (da == 0) {
                ++ties_a;
            } else if (db == 0) {
                ++ties_b;
            } else if ((da > 0) == (db > 0)) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    }
    const double na = static_cast<double>(total - ties_a);
    const double nb = static_cast<double>(total - ties_b);
    if (na <= 0 || nb <= 0) return std::nullopt;
    return static_cast<double>(concordant - discordant) / std::sqrt(na * nb);
}

std::optional<double> naive_rho(const std::vector<double>& a, const std::vector<double>& b) {
    const std::vector<double> ra = average_ranks(a);
    const std::vector<double> rb = average_ranks(b);
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= static_cast<double>(ra.size());
    mb /= static_cast<double>(rb.size());
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0 || sbb == 0) return std::nullopt;
    return sab / std::sqrt(saa * sbb);
}

std::vector<double> random_doubles(std::size_t n, Rng& rng, int grid) {
    std::vector<double> v(n);
    for (double& x : v) {
        x = grid > 0 ? static_cast<double>(rng.index(static_cast<std::size_t>(grid)))
                     : rng.uniform_double();
    }
    return v;
}

constexpr double kTiny = 1e-9;

}  // namespace

TEST_CASE("f-score") {
    CHECK(f_score({1, 0, 1, 0}, {1, 0, 1, 0}) == 1.0);
    CHECK(f_score({1, 1, 0, 0}, {0, 0, 1, 1}) == 0.0);
    // P = 1/2, R = 1/3 -> F = 2*(1/6)/(5/6) = 0.4
    CHECK(f_score({1, 1, 0, 0, 0, 0}, {1, 0, 1, 1, 0, 0}) == doctest::Approx(0.4).epsilon(1e-12));
    // both empty means both agree there is nothing to keep
    CHECK(f_score({0, 0, 0}, {0, 0, 0}) == 1.0);
    // one side empty: P + R = 0 guard
    CHECK(f_score({0, 0, 0}, {1, 0, 0}) == 0.0);
    CHECK(f_score({1, 0, 0}, {0, 0, 0}) == 0.0);
    CHECK_THROWS_AS(f_score({1, 0}, {1, 0, 0}), DimensionError);

    // symmetric in its arguments
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        SummaryMask a(12), b(12);
        for (std::size_t i = 0; i < 12; ++i) {
            a[i] = rng.index(2) ? 1 : 0;
            b[i] = rng.index(2) ? 1 : 0;
        }
        CHECK(f_score(a, b) == doctest::Approx(f_score(b, a)).epsilon(1e-12));
    }
}

TEST_CASE("kendall tau") {
    SUBCASE("worked examples") {
        CHECK(*kendall_tau({1, 2, 3, 4}, {1, 3, 2, 4}) ==
              doctest::Approx(2.0 / 3.0).epsilon(1e-12));
        CHECK(*kendall_tau({1, 2, 3}, {1, 2, 3}) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(*kendall_tau({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0).epsilon(1e-12));
        // one tie on the left: 2 / sqrt(2 * 3)
        CHECK(*kendall_tau({1, 1, 2}, {1, 2, 3}) ==
              doctest::Approx(2.0 / std::sqrt(6.0)).epsilon(1e-12));
        // single swapped pair among five, no ties: (1 - 9) / 10
        CHECK(*kendall_tau({1, 2, 3, 4, 5}, {5, 4, 3, 1, 2}) ==
              doctest::Approx(-0.8).epsilon(1e-12));
    }

    SUBCASE("constant vectors are undefined, not zero") {
        CHECK_FALSE(kendall_tau({2, 2, 2}, {1, 2, 3}).has_value());
        CHECK_FALSE(kendall_tau({1, 2, 3}, {7, 7, 7}).has_value());
        CHECK_FALSE(kendall_tau({5, 5}, {5, 5}).has_value());
    }

    SUBCASE("input validation") {
        CHECK_THROWS_AS(kendall_tau({1, 2}, {1, 2, 3}), DimensionError);
        CHECK_THROWS_AS(kendall_tau({1}, {1}), DimensionError);
    }

    SUBCASE("matches the quadratic oracle with heavy ties") {
        Rng rng(32);
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t n = 2 + rng.index(29);
            // grid 4 forces tie runs on both sides
            const std::vector<double> a = random_doubles(n, rng, trial % 2 ? 4 : 0);
            const std::vector<double> b = random_doubles(n, rng, trial % 3 ? 5 : 0);
            const auto got = kendall_tau(a, b);
            const auto want = naive_tau(a, b);
            REQUIRE(got.has_value() == want.has_value());
            if (got) {
                CHECK(*got == doctest::Approx(*want).epsilon(kTiny));
                CHECK(*got >= -1.0 - kTiny);
                CHECK(*got <= 1.0 + kTiny);
            }
        }
    }

    SUBCASE("invariant under strictly increasing transforms") {
        Rng rng(33);
        for (int trial = 0; trial < 10; ++trial) {
            const std::vector<double> a = random_doubles(15, rng, 6);
            const std::vector<double> b = random_doubles(15, rng, 0);
            std::vector<double> fa(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) fa[i] = std::exp(a[i] * 0.5);
            const auto t1 = kendall_tau(a, b);
            const auto t2 = kendall_tau(fa, b);
            REQUIRE(t1.has_value() == t2.has_value());
            if (t1) CHECK(*t1 == doctest::Approx(*t2).epsilon(1e-12));
        }
    }

    SUBCASE("random permutations center on zero") {
        Rng rng(34);
        std::vector<double> a(20), b(20);
        for (std::size_t i = 0; i < 20; ++i) a[i] = b[i] = static_cast<double>(i);
        double mean = 0;
        for (int trial = 0; trial < 500; ++trial) {
            rng.shuffle(b);
            mean += *kendall_tau(a, b);
        }
        mean /= 500.0;
        CHECK(std::abs(mean) < 0.05);  // sigma of the mean is ~0.007
    }
}

TEST_CASE("spearman rho") {
    SUBCASE("worked examples") {
        CHECK(*spearman_rho({1, 2, 3}, {1, 3, 2}) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(*spearman_rho({1, 2, 3, 4}, {2, 4, 6, 8}) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(*spearman_rho({1, 2, 3}, {9, 5, 1}) == doctest::Approx(-1.0).epsilon(1e-12));
    }

    SUBCASE("average ranks") {
        CHECK(average_ranks({10, 20, 20, 30}) == std::vector<double>({1, 2.5, 2.5, 4}));
        CHECK(average_ranks({5, 4, 3}) == std::vector<double>({3, 2, 1}));
        CHECK(average_ranks({7, 7, 7}) == std::vector<double>({2, 2, 2}));
        CHECK(average_ranks({0.5}) == std::vector<double>({1}));
    }

    SUBCASE("constant vectors are undefined") {
        CHECK_FALSE(spearman_rho({3, 3, 3}, {1, 2, 3}).has_value());
        CHECK_FALSE(spearman_rho({1, 2, 3}, {0, 0, 0}).has_value());
    }

    SUBCASE("matches rank-then-Pearson on random ties") {
        Rng rng(35);
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t n = 2 + rng.index(29);
            const std::vector<double> a = random_doubles(n, rng, trial % 2 ? 3 : 0);
            const std::vector<double> b = random_doubles(n, rng, trial % 3 ? 6 : 0);
            const auto got = spearman_rho(a, b);
            const auto want = naive_rho(a, b);
            REQUIRE(got.has_value() == want.has_value());
            if (got) {
                CHECK(*got == doctest::Approx(*want).epsilon(kTiny));
                CHECK(*got >= -1.0 - kTiny);
                CHECK(*got <= 1.0 + kTiny);
            }
        }
    }

    SUBCASE("monotone-transform invariant") {
        Rng rng(36);
        const std::vector<double> a = random_doubles(18, rng, 0);
        const std::vector<double> b = random_doubles(18, rng, 0);
        std::vector<double> fa(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) fa[i] = a[i] * a[i] * a[i] + 2.0;
        CHECK(*spearman_rho(a, b) == doctest::Approx(*spearman_rho(fa, b)).epsilon(1e-12));
    }
}

TEST_CASE("multi-ground-truth protocol on the traced fixture") {
    const fixture::MultiFixture fx = fixture::make_multi_fixture();
    EvalOptions opts;
    opts.fraction = fx.fraction;
    const EvalReport rep = eval_multi_gt(fx.scorer, fx.corpus, opts);

    REQUIRE(rep.videos.size() == 2);
    CHECK(rep.n_videos == 2);
    CHECK(rep.n_pairs == 4);
    CHECK(rep.videos_skipped == 0);
    CHECK(rep.rank_skipped == 0);

    const EvalReport::VideoEntry& va = rep.videos[0];
    const EvalReport::VideoEntry& vb = rep.videos[1];
    CHECK(va.video_id == "va");
    CHECK(vb.video_id == "vb");
    CHECK(va.f == fx.f_va);  // exact: averages of sixteenths
    CHECK(vb.f == fx.f_vb);
    CHECK(rep.mean_f == fx.mean_f);
    REQUIRE(va.tau);
    REQUIRE(va.rho);
    REQUIRE(vb.tau);
    REQUIRE(vb.rho);
    CHECK(*va.tau == doctest::Approx(fx.tau_va).epsilon(1e-12));
    CHECK(*va.rho == doctest::Approx(fx.rho_va).epsilon(1e-12));
    CHECK(*vb.tau == doctest::Approx(fx.tau_vb).epsilon(1e-12));
    CHECK(*vb.rho == doctest::Approx(fx.rho_vb).epsilon(1e-12));
    REQUIRE(rep.mean_tau);
    CHECK(*rep.mean_tau == doctest::Approx((fx.tau_va + fx.tau_vb) / 2).epsilon(1e-12));
    CHECK(*rep.mean_rho == doctest::Approx((fx.rho_va + fx.rho_vb) / 2).epsilon(1e-12));

    SUBCASE("restricting to one video degenerates to its own entry") {
        EvalOptions one = opts;
        one.video_ids = {"vb"};
        const EvalReport r1 = eval_multi_gt(fx.scorer, fx.corpus, one);
        REQUIRE(r1.videos.size() == 1);
        CHECK(r1.mean_f == fx.f_vb);
        CHECK(r1.n_pairs == 2);
        CHECK(*r1.mean_tau == doctest::Approx(fx.tau_vb).epsilon(1e-12));
    }

    SUBCASE("unknown video id rejected") {
        EvalOptions bad = opts;
        bad.video_ids = {"ghost"};
        CHECK_THROWS_AS(eval_multi_gt(fx.scorer, fx.corpus, bad), ValidationError);
    }

    SUBCASE("threaded evaluation returns identical reports") {
        EvalOptions threaded = opts;
        threaded.threads = 4;
        const EvalReport r2 = eval_multi_gt(fx.scorer, fx.corpus, threaded);
        REQUIRE(r2.videos.size() == rep.videos.size());
        CHECK(r2.mean_f == rep.mean_f);
        CHECK(r2.videos[0].video_id == rep.videos[0].video_id);
        CHECK(*r2.mean_tau == *rep.mean_tau);
        CHECK(*r2.mean_rho == *rep.mean_rho);
    }

    SUBCASE("scorer length mismatch is reported") {
        fixture::TableScorer broken = fx.scorer;
        broken.table["s1"].pop_back();
        CHECK(testutil::throws_with<DimensionError>(
            [&] { eval_multi_gt(broken, fx.corpus, opts); }, "va"));
    }
}

TEST_CASE("multi-ground-truth counters and skips") {
    fixture::MultiFixture fx = fixture::make_multi_fixture();

    SUBCASE("constant scores rank-skip the video but keep its F") {
        fx.scorer.table["s1"] = std::vector<Real>(4, Real(0.5));
        fx.scorer.table["s2"] = std::vector<Real>(4, Real(0.5));
        EvalOptions opts;
        opts.fraction = fx.fraction;
        const EvalReport rep = eval_multi_gt(fx.scorer, fx.corpus, opts);
        CHECK(rep.rank_skipped == 1);
        REQUIRE(rep.mean_tau);  // vb still contributes
        CHECK(*rep.mean_tau == doctest::Approx(fx.tau_vb).epsilon(1e-12));
        // constant scores tie everywhere; top-fraction keeps frames {0,1}
        CHECK(rep.videos[0].f == 0.75);  // gt {0,1} -> 1, gt {0,3} -> 0.5
        CHECK_FALSE(rep.videos[0].tau.has_value());
    }

    SUBCASE("video without any ground truth is skipped and counted") {
        fx.corpus.videos.push_back(fixture::make_video("vz", 3, 4));
        fx.corpus.rebuild_indices();
        EvalOptions opts;
        opts.fraction = fx.fraction;
        const EvalReport rep = eval_multi_gt(fx.scorer, fx.corpus, opts);
        CHECK(rep.videos_skipped == 1);
        CHECK(rep.n_videos == 2);
        CHECK(rep.mean_f == fx.mean_f);
    }

    SUBCASE("all videos rank-skipped leaves the means unset") {
        for (auto& [id, scores] : fx.scorer.table) {
            scores.assign(scores.size(), Real(0.25));
        }
        EvalOptions opts;
        opts.fraction = fx.fraction;
        const EvalReport rep = eval_multi_gt(fx.scorer, fx.corpus, opts);
        CHECK(rep.rank_skipped == 2);
        CHECK_FALSE(rep.mean_tau.has_value());
        CHECK_FALSE(rep.mean_rho.has_value());
        CHECK(rep.mean_f > 0.0);  // F is still well defined
    }
}

TEST_CASE("single-ground-truth protocol on the traced fixture") {
    const fixture::SingleFixture fx = fixture::make_single_fixture();
    EvalOptions opts;
    opts.fraction = fx.fraction;
    const EvalReport rep = eval_single_gt(fx.scorer, fx.corpus, opts);

    REQUIRE(rep.videos.size() == 2);
    CHECK(rep.n_pairs == 2);
    const EvalReport::VideoEntry& vc = rep.videos[0];
    const EvalReport::VideoEntry& vd = rep.videos[1];
    CHECK(vc.f == fx.f_vc);
    CHECK(vd.f == doctest::Approx(fx.f_vd).epsilon(1e-12));
    // tau's denominator is sqrt(a)*sqrt(b), so a strictly monotone pair
    // lands within one ulp of +-1 rather than exactly on it; rho divides
    // by a single sqrt of a perfect square and stays exact
    REQUIRE(vc.tau);
    CHECK(*vc.tau == doctest::Approx(fx.tau_vc).epsilon(1e-12));
    CHECK(*vc.rho == fx.rho_vc);
    REQUIRE(vd.tau);
    CHECK(*vd.tau == doctest::Approx(fx.tau_vd).epsilon(1e-12));
    CHECK(*vd.rho == fx.rho_vd);
    REQUIRE(rep.mean_tau);
    CHECK(*rep.mean_tau == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(*rep.mean_rho == doctest::Approx(0.0).epsilon(1e-12));

    SUBCASE("missing importance skips the rank metrics only") {
        fixture::SingleFixture noimp = fixture::make_single_fixture();
        noimp.corpus.ground_truths[0].importance.reset();
        noimp.corpus.ground_truths[1].importance.reset();
        noimp.corpus.importance_annotated = false;
        const EvalReport r2 = eval_single_gt(noimp.scorer, noimp.corpus, opts);
        CHECK(r2.rank_skipped == 2);
        CHECK_FALSE(r2.mean_tau.has_value());
        CHECK(r2.mean_f == doctest::Approx((fx.f_vc + fx.f_vd) / 2).epsilon(1e-12));
    }

    SUBCASE("two ground truths for one video violate the protocol") {
        fixture::SingleFixture twin = fixture::make_single_fixture();
        fixture::add_pair(twin.corpus, "vc", "sc2", {1, 0, 0, 0, 0, 0, 0, 0, 0, 1});
        twin.corpus.rebuild_indices();
        twin.scorer.table["sc2"] = twin.scorer.table["sc"];
        CHECK(testutil::throws_with<ValidationError>(
            [&] { eval_single_gt(twin.scorer, twin.corpus, opts); }, "vc"));
    }

    SUBCASE("multi protocol also runs on this corpus") {
        // same corpus, different summarizer: top-fraction instead of knapsack
        const EvalReport r3 = eval_multi_gt(fx.scorer, fx.corpus, opts);
        CHECK(r3.n_pairs == 2);
        // vc: top 5 of scores_c = frames {3,4,5,8,9} vs gt {3,4,5}: P 3/5 R 1
        CHECK(r3.videos[0].f == doctest::Approx(0.75).epsilon(1e-12));
    }
}

TEST_CASE("ground-truth scorer saturates both protocols") {
    SynthSpec spec;
    spec.seed = 77;
    spec.n_videos = 3;
    spec.frames_min = 40;
    spec.frames_max = 60;
    spec.dim = 16;
    spec.scripts_per_video = 2;
    spec.strength = Real(1);
    const Corpus corpus = generate_corpus(spec);

    const fixture::GroundTruthScorer oracle(corpus);
    EvalOptions opts;
    opts.fraction = spec.summary_fraction;
    const EvalReport rep = eval_multi_gt(oracle, corpus, opts);
    CHECK(rep.mean_f == 1.0);  // scoring the mask itself must be perfect
    CHECK(rep.n_pairs == 6);
}

TEST_CASE("report serialization") {
    const fixture::MultiFixture fx = fixture::make_multi_fixture();
    EvalOptions opts;
    opts.fraction = fx.fraction;
    const EvalReport rep = eval_multi_gt(fx.scorer, fx.corpus, opts);

    SUBCASE("json carries every field") {
        const std::string text = report_json(rep);
        const auto j = nlohmann::json::parse(text);
        CHECK(j.at("n_videos").get<int>() == 2);
        CHECK(j.at("n_pairs").get<int>() == 4);
        CHECK(j.at("videos_skipped").get<int>() == 0);
        CHECK(j.at("rank_skipped").get<int>() == 0);
        CHECK(j.at("mean_f").get<double>() == rep.mean_f);
        CHECK(j.at("mean_tau").get<double>() == doctest::Approx(*rep.mean_tau).epsilon(1e-12));
        REQUIRE(j.at("videos").size() == 2);
        CHECK(j.at("videos")[0].at("id").get<std::string>() == "va");
        CHECK(j.at("videos")[0].at("f").get<double>() == rep.videos[0].f);
    }

    SUBCASE("undefined means serialize as null") {
        fixture::MultiFixture flat = fixture::make_multi_fixture();
        for (auto& [id, scores] : flat.scorer.table) scores.assign(scores.size(), Real(0.5));
        const EvalReport r2 = eval_multi_gt(flat.scorer, flat.corpus, opts);
        const auto j = nlohmann::json::parse(report_json(r2));
        CHECK(j.at("mean_tau").is_null());
        CHECK(j.at("videos")[0].at("tau").is_null());
    }

    SUBCASE("table lists videos, percents and the n/a marker") {
        fixture::MultiFixture flat = fixture::make_multi_fixture();
        for (auto& [id, scores] : flat.scorer.table) scores.assign(scores.size(), Real(0.5));
        const std::string table = report_table(eval_multi_gt(flat.scorer, flat.corpus, opts));
        CHECK(table.find("va") != std::string::npos);
        CHECK(table.find("vb") != std::string::npos);
        CHECK(table.find("n/a") != std::string::npos);
        CHECK(table.find("F1") != std::string::npos);
        // flat scores: va pairs F 1 and 0.5, vb pairs F 1 and 0, corpus
        // mean 62.5 in the percent column
        CHECK(table.find("62.5") != std::string::npos);
    }
}
