#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "test_util.hpp"
#include "vsum/attention.hpp"
#include "vsum/gradcheck.hpp"
#include "vsum/graph.hpp"
#include "vsum/model.hpp"

using namespace vsum;

static_assert(sizeof(Real) == 8, "this binary must be built on the double-precision engine");

namespace {

// Builds a scalar loss over registered params "p0", "p1", ...; returns the
// loss node. The same function is replayed for every finite-difference
// evaluation, so any internal randomness must be self-seeded.
using BuildFn = std::function<int(Graph&, const std::vector<int>&)>;

double eval_loss(const BuildFn& build, std::vector<Tensor2>& params, bool track,
                 std::map<std::string, Tensor2>* grads_out = nullptr) {
    Graph g(track);
    std::vector<int> ids;
    ids.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        ids.push_back(g.param("p" + std::to_string(i), params[i]));
    }
    const int loss = build(g, ids);
    const double value = static_cast<double>(g.value(loss).v[0]);
    if (grads_out) *grads_out = g.backward(loss);
    return value;
}

// Central differences at the strict threshold: every entry of every
// parameter must satisfy |a - f| / max(1e-8, |a| + |f|) < 1e-4.
void check_strict(const BuildFn& build, std::vector<Tensor2> params, double h = 1e-5,
                  double threshold = 1e-4) {
    std::map<std::string, Tensor2> analytic;
    eval_loss(build, params, true, &analytic);

    double worst = 0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        const Tensor2& a = analytic.at("p" + std::to_string(p));
        for (std::size_t i = 0; i < params[p].size(); ++i) {
            const Real saved = params[p].v[i];
            params[p].v[i] = saved + static_cast<Real>(h);
            const double up = eval_loss(build, params, false);
            params[p].v[i] = saved - static_cast<Real>(h);
            const double down = eval_loss(build, params, false);
            params[p].v[i] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double an = static_cast<double>(a.v[i]);
            const double rel = std::abs(an - fd) / std::max(1e-8, std::abs(an) + std::abs(fd));
            worst = std::max(worst, rel);
        }
    }
    CHECK(worst < threshold);
}

int weighted_sum(Graph& g, int node, int rows, int cols, std::uint64_t seed) {
    Rng rng(seed);
    Tensor2 w(rows, cols);
    for (Real& x : w.v) x = rng.uniform(Real(-1), Real(1));
    return g.sum(g.elementwise_mul(node, g.input(std::move(w))));
}

}  // namespace

TEST_CASE("strict finite differences per primitive") {
    Rng rng(40);
    const Tensor2 a = testutil::random_tensor(3, 4, rng);
    const Tensor2 b = testutil::random_tensor(4, 5, rng);
    const Tensor2 c = testutil::random_tensor(3, 5, rng);
    const Tensor2 row = testutil::random_tensor(1, 4, rng);

    SUBCASE("matmul") {
        check_strict([](Graph& g, const std::vector<int>& p) {
            return weighted_sum(g, g.matmul(p[0], p[1]), 3, 5, 1);
        }, {a, b});
    }

    SUBCASE("matmul_nt") {
        check_strict([](Graph& g, const std::vector<int>& p) {
            return weighted_sum(g, g.matmul_nt(p[0], p[1]), 3, 3, 2);
        }, {a, testutil::random_tensor(3, 4, rng)});
    }

    SUBCASE("add and elementwise_mul") {
        check_strict([](Graph& g, const std::vector<int>& p) {
            return weighted_sum(g, g.elementwise_mul(g.add(p[0], p[1]), p[2]), 3, 4, 3);
        }, {a, testutil::random_tensor(3, 4, rng), testutil::random_tensor(3, 4, rng)});
    }

    SUBCASE("add_broadcast and scale") {
        check_strict([](Graph& g, const std::vector<int>& p) {
            return weighted_sum(g, g.scale(g.add_broadcast(p[0], p[1]), Real(1.5)), 3, 4, 4);
        }, {a, row});
    }

    SUBCASE("softmax_rows") {
        check_strict([](Graph& g, const std::vector<int>& p) {
            return weighted_sum(g, g.softmax_rows(p[0]), 3, 4, 5);
        }, {scale(a, Real(2))});
    }

    SUBCASE("l2_normalize_rows") {
        check_strict([](Graph& g, const std::vector<int>& p) {
            return weighted_sum(g, g.l2_normalize_rows(p[0]), 3, 4, 6);
        }, {add(a, Tensor2(3, 4, Real(0.5)))});  // keep rows well away from zero
    }

    SUBCASE("layer_norm_rows") {
        check_strict([](Graph& g, const std::vector<int>& p) {
            return weighted_sum(g, g.layer_norm_rows(p[0], p[1], p[2]), 3, 4, 7);
        }, {a, testutil::random_tensor(1, 4, rng, Real(0.5), Real(1.5)), row});
    }

    SUBCASE("sigmoid and relu") {
        // keep every relu input at least 0.05 from the kink so the central
        // difference never straddles it
        Tensor2 off(3, 4);
        for (std::size_t i = 0; i < off.size(); ++i) {
            Real x = a.v[i];
            if (std::abs(static_cast<double>(x)) < 0.05) x += Real(0.1);
            off.v[i] = x;
        }
        check_strict([](Graph& g, const std::vector<int>& p) {
            return weighted_sum(g, g.relu(p[0]), 3, 4, 8);
        }, {off});
        check_strict([](Graph& g, const std::vector<int>& p) {
            return weighted_sum(g, g.sigmoid(p[0]), 3, 4, 9);
        }, {a});
    }

    SUBCASE("concat_cols") {
        check_strict([](Graph& g, const std::vector<int>& p) {
            return weighted_sum(g, g.concat_cols(p[0], p[1]), 3, 9, 10);
        }, {a, c});
    }

    SUBCASE("dropout with a replayed mask") {
        check_strict([](Graph& g, const std::vector<int>& p) {
            Rng mask_rng(99);  // self-seeded: identical mask on every replay
            return weighted_sum(g, g.dropout(p[0], Real(0.4), mask_rng, true), 3, 4, 11);
        }, {a});
    }

    SUBCASE("bce over sigmoid scores") {
        const std::vector<Real> target = {Real(1), Real(0), Real(1)};
        check_strict([target](Graph& g, const std::vector<int>& p) {
            return g.bce_loss(g.sigmoid(p[0]), target);
        }, {testutil::random_tensor(3, 1, rng)});
    }

    SUBCASE("mse") {
        const std::vector<Real> target = {Real(0.2), Real(0.8), Real(0.5)};
        check_strict([target](Graph& g, const std::vector<int>& p) {
            return g.mse_loss(g.sigmoid(p[0]), target);
        }, {testutil::random_tensor(3, 1, rng)});
    }

    SUBCASE("sum") {
        check_strict([](Graph& g, const std::vector<int>& p) { return g.sum(p[0]); }, {a});
    }
}

TEST_CASE("quadratic regression gradients are exact to roundoff") {
    // loss = mean((W x + b - y)^2): zero third derivative, so even a large
    // step has no truncation error
    Rng rng(41);
    const Tensor2 x = testutil::random_tensor(4, 2, rng);
    const Tensor2 y = testutil::random_tensor(4, 2, rng);
    const std::vector<Real> target(8, Real(0));

    check_strict([x, y](Graph& g, const std::vector<int>& p) {
        const int pred = g.add_broadcast(g.matmul(g.input_ref(x), p[0]), p[1]);
        const int err = g.add(pred, g.scale(g.input_ref(y), Real(-1)));
        return g.sum(g.elementwise_mul(err, err));
    }, {testutil::random_tensor(2, 2, rng), testutil::random_tensor(1, 2, rng)}, 1e-3, 1e-4);
}

TEST_CASE("attention block under strict finite differences") {
    Rng rng(42);
    const int dim = 8, heads = 2, n = 4, m = 3;
    WcaParams params;
    for (int h = 0; h < heads; ++h) {
        params.wq.push_back(testutil::random_tensor(dim, dim / heads, rng, Real(-0.5), Real(0.5)));
        params.wk.push_back(testutil::random_tensor(dim, dim / heads, rng, Real(-0.5), Real(0.5)));
        params.wv.push_back(testutil::random_tensor(dim, dim / heads, rng, Real(-0.5), Real(0.5)));
    }
    params.wo = testutil::random_tensor(dim, dim, rng, Real(-0.5), Real(0.5));
    const Tensor2 x = testutil::random_tensor(n, dim, rng);
    const Tensor2 y = testutil::random_tensor(m, dim, rng);
    const Tensor2 pe = sinusoidal_pe(n, dim);

    for (AttentionScaling mode :
         {AttentionScaling::kSimilarity, AttentionScaling::kInverseSqrtHead}) {
        const auto loss_of = [&](bool track, std::map<std::string, Tensor2>* grads_out) {
            Graph g(track);
            const int out = wca_forward_graph(g, params, "w", g.input_ref(x), g.input_ref(y),
                                              g.input_ref(pe), mode);
            const int loss = weighted_sum(g, out, n, dim, 12);
            const double value = static_cast<double>(g.value(loss).v[0]);
            if (grads_out) *grads_out = g.backward(loss);
            return value;
        };

        std::map<std::string, Tensor2> analytic;
        loss_of(true, &analytic);

        const double h = 1e-5;
        double worst = 0;
        const auto probe = [&](const std::string& name, Tensor2& theta) {
            const Tensor2& a = analytic.at(name);
            for (std::size_t i = 0; i < theta.size(); ++i) {
                const Real saved = theta.v[i];
                theta.v[i] = saved + static_cast<Real>(h);
                const double up = loss_of(false, nullptr);
                theta.v[i] = saved - static_cast<Real>(h);
                const double down = loss_of(false, nullptr);
                theta.v[i] = saved;
                const double fd = (up - down) / (2.0 * h);
                const double an = static_cast<double>(a.v[i]);
                worst = std::max(worst, std::abs(an - fd) /
                                            std::max(1e-8, std::abs(an) + std::abs(fd)));
            }
        };
        for (int hh = 0; hh < heads; ++hh) {
            const std::string hp = "w.h" + std::to_string(hh);
            probe(hp + ".wq", params.wq[static_cast<std::size_t>(hh)]);
            probe(hp + ".wk", params.wk[static_cast<std::size_t>(hh)]);
            probe(hp + ".wv", params.wv[static_cast<std::size_t>(hh)]);
        }
        probe("w.wo", params.wo);
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("full model gradient check at the strict threshold") {
    GradCheckConfig cfg;  // N=6 M=3 K=2 D=8 H=2, step 1e-5

    SUBCASE("full model") {
        const GradCheckReport report = gradient_check(cfg);
        CHECK(report.worst_rel < 1e-4);
        CHECK(report.loss > 0);
        CHECK_FALSE(report.tensors.empty());
        for (const GradCheckTensorReport& t : report.tensors) {
            CHECK(t.max_rel < 1e-4);
            CHECK(t.entries > 0);
        }
        // 1513 parameters across 35 tensors
        int entries = 0;
        for (const GradCheckTensorReport& t : report.tensors) entries += t.entries;
        CHECK(entries == 1513);
        CHECK(report.tensors.size() == 35);
    }

    SUBCASE("no-transcript variant") {
        cfg.use_transcript_branch = false;
        const GradCheckReport report = gradient_check(cfg);
        CHECK(report.worst_rel < 1e-4);
        int entries = 0;
        for (const GradCheckTensorReport& t : report.tensors) entries += t.entries;
        CHECK(entries == 1193);
    }

    SUBCASE("no-scaling variant") {
        cfg.use_similarity_scaling = false;
        const GradCheckReport report = gradient_check(cfg);
        CHECK(report.worst_rel < 1e-4);
    }

    SUBCASE("alternate seeds hold the bound too") {
        for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
            cfg.seed = seed;
            CHECK(gradient_check(cfg).worst_rel < 1e-4);
        }
    }

    SUBCASE("the negative control is caught") {
        cfg.corrupt = true;
        CHECK(gradient_check(cfg).worst_rel > 1e-4);
    }

    SUBCASE("config validation") {
        cfg.n_frames = 0;
        CHECK_THROWS_AS(gradient_check(cfg), ConfigError);
        cfg = {};
        cfg.step = 0;
        CHECK_THROWS_AS(gradient_check(cfg), ConfigError);
    }
}
