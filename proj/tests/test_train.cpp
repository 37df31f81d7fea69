#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

#include "mfmap/errors.hpp"
#include "mfmap/likelihood.hpp"
#include "mfmap/model.hpp"
#include "mfmap/ordering.hpp"
#include "mfmap/rng.hpp"
#include "mfmap/spatial.hpp"
#include "mfmap/train.hpp"

using namespace mfmap;

namespace {

// Two small nested grids with iid standard-normal values: enough structure to
// exercise the optimizer plumbing without caring about fit quality.
struct SmallData {
    MultiFidelityLocations locs;
    Ensemble ens;
};

SmallData make_small_data(Rng& rng, Eigen::Index n) {
    SmallData d;
    std::vector<Eigen::MatrixXd> fids(2);
    fids[0].resize(4, 2);
    fids[0] << 0.25, 0.25, 0.75, 0.25, 0.25, 0.75, 0.75, 0.75;
    fids[1].resize(16, 2);
    int k = 0;
    for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
            fids[1](k, 0) = 0.125 + 0.25 * a;
            fids[1](k, 1) = 0.125 + 0.25 * b;
            ++k;
        }
    }
    d.locs = make_locations(std::move(fids));
    d.ens.n = n;
    for (int r = 0; r < 2; ++r) {
        Eigen::MatrixXd v(n, d.locs.size(r));
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            for (Eigen::Index j = 0; j < v.cols(); ++j) v(i, j) = rng.normal();
        }
        d.ens.values.push_back(v);
    }
    return d;
}

double pooled_variance(const Eigen::MatrixXd& values) {
    double mean = values.mean();
    double ss = (values.array() - mean).square().sum();
    return std::max(ss / (static_cast<double>(values.size()) - 1.0), 1e-12);
}

bool same_bits(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.size() == b.size() && (a.array() == b.array()).all();
}

}  // namespace

TEST_CASE("one epoch at learning rate zero returns the initialization") {
    Rng rng(Rng::derive(50, stream::kTest));
    auto d = make_small_data(rng, 8);

    ModelConfig model;
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.learning_rate = 0.0;
    cfg.seed = 5;
    auto map = fit(d.ens, d.locs, model, cfg);

    HyperParams expect = default_init(
        {pooled_variance(d.ens.values[0]), pooled_variance(d.ens.values[1])});
    REQUIRE(same_bits(map.theta.to_vector(0), expect.to_vector(0)));
    REQUIRE(same_bits(map.theta.to_vector(1), expect.to_vector(1)));
}

TEST_CASE("identical seeds give bit-identical fits") {
    Rng rng(Rng::derive(51, stream::kTest));
    auto d = make_small_data(rng, 10);

    ModelConfig model;
    TrainConfig cfg;
    cfg.epochs = 6;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 5;
    cfg.seed = 123;
    auto a = fit(d.ens, d.locs, model, cfg);
    auto b = fit(d.ens, d.locs, model, cfg);

    REQUIRE(same_bits(a.theta.to_vector(0), b.theta.to_vector(0)));
    REQUIRE(same_bits(a.theta.to_vector(1), b.theta.to_vector(1)));
    REQUIRE(a.trace == b.trace);
    REQUIRE(a.batch_values == b.batch_values);
}

TEST_CASE("trace covers every epoch and fidelities train independently") {
    Rng rng(Rng::derive(52, stream::kTest));
    auto d = make_small_data(rng, 9);

    ModelConfig model;
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.learning_rate = 0.03;
    cfg.seed = 9;
    auto both = fit(d.ens, d.locs, model, cfg);
    REQUIRE(both.trace[0].size() == 5);
    REQUIRE(both.trace[1].size() == 5);
    // Default batch covers each small fidelity whole: one update per epoch.
    REQUIRE(both.batch_values[0].size() == 5);
    REQUIRE(both.batch_values[1].size() == 5);

    TrainConfig only_first = cfg;
    only_first.enabled = {1, 0};
    auto partial = fit(d.ens, d.locs, model, only_first);
    REQUIRE(partial.trace[0] == both.trace[0]);
    REQUIRE(partial.trace[1].empty());
    HyperParams init = default_init(
        {pooled_variance(d.ens.values[0]), pooled_variance(d.ens.values[1])});
    REQUIRE(same_bits(partial.theta.to_vector(1), init.to_vector(1)));
    REQUIRE(!same_bits(partial.theta.to_vector(0), init.to_vector(0)));
}

TEST_CASE("epoch objective is the sum of its raw batch sums") {
    Rng rng(Rng::derive(54, stream::kTest));
    auto d = make_small_data(rng, 7);

    ModelConfig model;
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.learning_rate = 0.02;
    cfg.batch_size = 3;
    cfg.seed = 77;
    auto map = fit(d.ens, d.locs, model, cfg);

    // Fidelity 1 has 4 locations -> chunks of 3 + 1; fidelity 2 has 16 -> 6.
    REQUIRE(map.batch_values[0].size() == 4);
    REQUIRE(map.batch_values[1].size() == 12);
    REQUIRE(map.trace[0][0] ==
            map.batch_values[0][0] + map.batch_values[0][1]);
    double second = std::accumulate(map.batch_values[1].begin() + 6,
                                    map.batch_values[1].end(), 0.0);
    REQUIRE(map.trace[1][1] == Approx(second).margin(1e-12));
}

TEST_CASE("stalled improvement stops a fidelity and carries the trace") {
    Rng rng(Rng::derive(55, stream::kTest));
    auto d = make_small_data(rng, 6);

    ModelConfig model;
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.learning_rate = 0.0;  // improvement is exactly zero every epoch
    cfg.tolerance = 1e-4;
    cfg.patience = 3;
    cfg.seed = 2;
    auto map = fit(d.ens, d.locs, model, cfg);

    // Epoch 1 baselines; epochs 2-4 count as stagnant; the rest carry over.
    REQUIRE(map.trace[0].size() == 10);
    REQUIRE(map.batch_values[0].size() == 4);
    REQUIRE(map.batch_values[1].size() == 4);
    REQUIRE(map.trace[0][9] == map.trace[0][3]);
    REQUIRE(map.diagnostics[0].empty());
}

TEST_CASE("full objective does not fall during training") {
    Rng rng(Rng::derive(56, stream::kTest));
    auto d = make_small_data(rng, 12);

    ModelConfig model;
    TrainConfig cfg;
    cfg.epochs = 8;
    cfg.learning_rate = 0.02;
    cfg.seed = 31;
    auto map = fit(d.ens, d.locs, model, cfg);
    REQUIRE(map.final_objectives.sum() >=
            map.initial_objectives.sum() - 1e-9);

    auto smoothed = objective_trace(map);
    for (std::size_t r = 0; r < smoothed.size(); ++r) {
        for (std::size_t e = 1; e < smoothed[r].size(); ++e) {
            REQUIRE(smoothed[r][e] >= smoothed[r][e - 1]);
        }
    }
}

TEST_CASE("degenerate configurations are rejected") {
    Rng rng(Rng::derive(57, stream::kTest));
    auto d = make_small_data(rng, 4);
    ModelConfig model;

    TrainConfig cfg;
    cfg.epochs = 0;
    REQUIRE_THROWS_AS(fit(d.ens, d.locs, model, cfg), UsageError);

    cfg = TrainConfig{};
    cfg.learning_rate = -0.1;
    REQUIRE_THROWS_AS(fit(d.ens, d.locs, model, cfg), UsageError);

    cfg = TrainConfig{};
    cfg.enabled = {1};  // must cover both fidelities
    REQUIRE_THROWS_AS(fit(d.ens, d.locs, model, cfg), UsageError);
}

TEST_CASE("a single replicate trains with a warning instead of failing") {
    Rng rng(Rng::derive(58, stream::kTest));
    auto d = make_small_data(rng, 1);

    ModelConfig model;
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.learning_rate = 0.01;
    cfg.seed = 1;
    auto map = fit(d.ens, d.locs, model, cfg);
    REQUIRE(map.trace[0].size() == 2);
    REQUIRE(map.final_objectives.allFinite());
}

TEST_CASE("fitting recovers the generating variance-decay law", "[slow]") {
    // Sequential draw from the model's own hierarchy at fixed
    // hyperparameters: each ordered location draws d^2 from its
    // inverse-gamma prior and a weight vector from the conjugate normal,
    // shared by all replicates. The fitted theta then estimates the
    // prior-mean law E[d^2] = exp(d1) * ell^softplus(d2) consistently.
    const Eigen::Index n = 100;
    const Eigen::Index N = 400;
    Rng rng(Rng::derive(53, stream::kTest));

    // The domain is scaled so the ordering lengthscales straddle 1: that
    // keeps log(ell) roughly centered at zero, which decorrelates the d1
    // (level) and d2 (exponent) coordinates of the decay law.
    std::vector<Eigen::MatrixXd> fids(1);
    fids[0].resize(N, 2);
    for (Eigen::Index i = 0; i < N; ++i) {
        fids[0](i, 0) = 12.0 * rng.uniform();
        fids[0](i, 1) = 12.0 * rng.uniform();
    }
    auto locs = make_locations(std::move(fids));
    auto ord = conditional_maximin(locs);
    ModelConfig model;
    auto sets = build_conditioning_sets(ord, locs, model.m_max, model.mp_max);

    // The level is kept low enough that the conditional variances times the
    // summed relevance weights stay below one, so the sequential draw is a
    // stable (non-exploding) cascade.
    HyperParams truth = default_init({1.0});
    truth.fid[0].d1 = -2.0;
    truth.fid[0].d2 = 0.9;
    truth.fid[0].s1 = -40.0;  // generator has no nonlinear component

    auto caps = adaptive_sizes(truth, 0, model.epsilon, model.m_max,
                               model.mp_max);
    Eigen::MatrixXd ordered(n, N);
    for (Eigen::Index i = 0; i < N; ++i) {
        const auto& cond = sets.same[0][static_cast<std::size_t>(i)];
        int m_i = std::min(caps.first, static_cast<int>(cond.size()));
        Eigen::VectorXd q = relevance_weights(truth, 0, m_i, 0);
        auto prior = prior_params(truth, ord.floored(0, i), 0, model.g);
        double d2 = prior.beta / rng.gamma(prior.alpha);
        Eigen::VectorXd b(m_i);
        for (int j = 0; j < m_i; ++j) {
            b[j] = std::sqrt(d2 * q[j]) * rng.normal();
        }
        double d = std::sqrt(d2);
        for (Eigen::Index k = 0; k < n; ++k) {
            double mean = 0.0;
            for (int j = 0; j < m_i; ++j) {
                mean += b[j] * ordered(k, cond[static_cast<std::size_t>(j)]);
            }
            ordered(k, i) = mean + d * rng.normal();
        }
    }
    Ensemble ens;
    ens.n = n;
    Eigen::MatrixXd values(n, N);
    for (Eigen::Index rank = 0; rank < N; ++rank) {
        values.col(ord.perm[0][static_cast<std::size_t>(rank)]) =
            ordered.col(rank);
    }
    ens.values.push_back(values);

    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.learning_rate = 0.05;
    cfg.seed = 17;
    auto map = fit(ens, locs, model, cfg);

    INFO("fitted d1=" << map.theta.fid[0].d1 << " d2=" << map.theta.fid[0].d2
                      << " s1=" << map.theta.fid[0].s1
                      << " s2=" << map.theta.fid[0].s2
                      << " gamma=" << map.theta.fid[0].gamma
                      << " q0=" << map.theta.fid[0].q0
                      << " q1=" << map.theta.fid[0].q1);
    REQUIRE(map.diagnostics[0].empty());
    REQUIRE(std::abs(map.theta.fid[0].d1 - truth.fid[0].d1) <= 0.3);
    REQUIRE(std::abs(map.theta.fid[0].d2 - truth.fid[0].d2) <= 0.3);
}
