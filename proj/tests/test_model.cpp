#include <catch2/catch.hpp>

#include <cmath>

#include "mfmap/errors.hpp"
#include "mfmap/model.hpp"
#include "mfmap/ordering.hpp"
#include "mfmap/rng.hpp"
#include "mfmap/spatial.hpp"

using namespace mfmap;

namespace {

HyperParams two_fidelity_theta() {
    HyperParams theta = default_init({1.0, 1.0});
    return theta;
}

}  // namespace

TEST_CASE("softplus transform and inverse") {
    REQUIRE(softplus_inv(1.0) == Approx(0.5413248546129181).epsilon(1e-14));
    REQUIRE(softplus(softplus_inv(1.0)) == Approx(1.0).epsilon(1e-14));
    REQUIRE(softplus(softplus_inv(0.5)) == Approx(0.5).epsilon(1e-14));
    REQUIRE(softplus(40.0) == 40.0);
    REQUIRE(softplus_inv(45.0) == 45.0);
    for (double x : {-3.0, -0.5, 0.0, 0.7, 4.0}) {
        REQUIRE(softplus_inv(softplus(x)) == Approx(x).margin(1e-12));
        REQUIRE(softplus(x) > 0.0);
    }
}

TEST_CASE("prior parameters follow the decay law") {
    HyperParams theta = two_fidelity_theta();
    theta.fid[0].d1 = 0.0;
    theta.fid[0].d2 = softplus_inv(1.0);
    auto p = prior_params(theta, 1.0, 0, 4.0);
    REQUIRE(p.alpha == Approx(2.0625).epsilon(1e-15));
    REQUIRE(p.beta == Approx(1.0625).epsilon(1e-14));
    // Prior mean of d^2 is beta / (alpha - 1).
    REQUIRE(p.beta / (p.alpha - 1.0) == Approx(1.0).epsilon(1e-14));

    // At ell = 1 the decay exponent cannot matter.
    theta.fid[0].d2 = softplus_inv(7.3);
    auto p2 = prior_params(theta, 1.0, 0, 4.0);
    REQUIRE(p2.beta == Approx(p.beta).epsilon(1e-14));

    REQUIRE_THROWS_AS(prior_params(theta, 0.0, 0, 4.0), DataError);
}

TEST_CASE("prior sd to mean ratio equals g") {
    Rng rng(Rng::derive(11, stream::kTest));
    for (int trial = 0; trial < 20; ++trial) {
        HyperParams theta = two_fidelity_theta();
        theta.fid[1].d1 = 2.0 * rng.normal();
        theta.fid[1].d2 = rng.normal();
        double ell = 0.05 + rng.uniform();
        double g = 0.5 + 4.0 * rng.uniform();
        auto p = prior_params(theta, ell, 1, g);
        double mean = p.beta / (p.alpha - 1.0);
        double var = p.beta * p.beta /
                     ((p.alpha - 1.0) * (p.alpha - 1.0) * (p.alpha - 2.0));
        REQUIRE(std::sqrt(var) / mean == Approx(g).epsilon(1e-10));
        REQUIRE(mean == Approx(std::exp(theta.fid[1].d1) *
                               std::pow(ell, softplus(theta.fid[1].d2)))
                            .epsilon(1e-12));
    }
}

TEST_CASE("relevance weights evaluate the two-block formula") {
    HyperParams theta = two_fidelity_theta();
    theta.fid[1].q0 = 0.0;
    theta.fid[1].q1 = softplus_inv(1.0);
    auto single = relevance_weights(theta, 1, 1, 0);
    REQUIRE(single.size() == 1);
    REQUIRE(single[0] == Approx(std::exp(-1.0)).epsilon(1e-14));

    theta.fid[1].q1 = softplus_inv(0.5);
    theta.fid[1].qp0 = -1.0;
    theta.fid[1].qp1 = softplus_inv(0.25);
    auto q = relevance_weights(theta, 1, 2, 2);
    REQUIRE(q.size() == 4);
    REQUIRE(q[0] == Approx(std::exp(-0.5)).epsilon(1e-13));
    REQUIRE(q[1] == Approx(std::exp(-1.0)).epsilon(1e-13));
    REQUIRE(q[2] == Approx(std::exp(-1.25)).epsilon(1e-13));
    REQUIRE(q[3] == Approx(std::exp(-1.5)).epsilon(1e-13));
}

TEST_CASE("relevance weights decrease strictly within blocks") {
    HyperParams theta = two_fidelity_theta();
    auto q = relevance_weights(theta, 1, 10, 10);
    for (int j = 1; j < 10; ++j) {
        REQUIRE(q[j] < q[j - 1]);
        REQUIRE(q[10 + j] < q[10 + j - 1]);
    }

    // Pushing the unconstrained decay far negative flattens the block.
    theta.fid[1].q1 = -40.0;
    auto flat = relevance_weights(theta, 1, 5, 0);
    REQUIRE(flat.maxCoeff() / flat.minCoeff() == Approx(1.0).margin(1e-10));
}

TEST_CASE("adaptive truncation sizes") {
    HyperParams theta = two_fidelity_theta();
    theta.fid[1].q0 = 0.0;
    theta.fid[1].q1 = softplus_inv(0.5);

    auto [m, mp] = adaptive_sizes(theta, 1, 0.01, 30, 30);
    REQUIRE(m == 9);  // exp(-4.5) = 0.0111 passes, exp(-5) fails
    REQUIRE(mp == 9);

    auto [m0, mp0] = adaptive_sizes(theta, 0, 0.01, 30, 30);
    REQUIRE(m0 == 9);
    REQUIRE(mp0 == 0);  // fidelity 1 has no cross block

    auto [mfull, mpfull] = adaptive_sizes(theta, 1, 0.0, 30, 30);
    REQUIRE(mfull == 30);
    REQUIRE(mpfull == 30);

    // Exact boundary: weight at k = 1 equals epsilon, k = 2 falls below.
    double eps = 0.01;
    theta.fid[1].q0 = std::log(eps) + softplus(theta.fid[1].q1);
    auto [mb, mpb] = adaptive_sizes(theta, 1, eps, 30, 30);
    REQUIRE(mb == 1);
    (void)mpb;

    // Decay strong enough that even k = 1 fails.
    theta.fid[1].q0 = std::log(eps) + softplus(theta.fid[1].q1) - 0.5;
    auto [mz, mpz] = adaptive_sizes(theta, 1, eps, 30, 30);
    REQUIRE(mz == 0);
    (void)mpz;
}

TEST_CASE("adaptive sizes are monotone in epsilon and level") {
    Rng rng(Rng::derive(12, stream::kTest));
    for (int trial = 0; trial < 50; ++trial) {
        HyperParams theta = two_fidelity_theta();
        theta.fid[1].q0 = rng.normal();
        theta.fid[1].q1 = rng.normal();
        double e1 = 0.001 + 0.2 * rng.uniform();
        double e2 = e1 + 0.2 * rng.uniform();
        auto a = adaptive_sizes(theta, 1, e1, 30, 30);
        auto b = adaptive_sizes(theta, 1, e2, 30, 30);
        REQUIRE(a.first >= b.first);

        HyperParams bumped = theta;
        bumped.fid[1].q0 += 0.5;
        auto c = adaptive_sizes(bumped, 1, e1, 30, 30);
        REQUIRE(c.first >= a.first);
    }
}

TEST_CASE("kernel limits and symmetry") {
    Eigen::VectorXd x(3), xp(3);
    x << 0.3, -1.2, 0.5;
    xp = x;
    Eigen::VectorXd zero_q = Eigen::VectorXd::Zero(3);
    REQUIRE(kernel(x, xp, zero_q, 1.0, 1.0, RhoFamily::kMatern32) ==
            Approx(1.0));

    Eigen::VectorXd one_q = Eigen::VectorXd::Ones(3);
    xp << 1.0, 0.0, -2.0;
    REQUIRE(kernel(x, xp, one_q, 0.0, 1.0, RhoFamily::kMatern32) ==
            Approx(x.dot(xp)).epsilon(1e-14));

    Rng rng(Rng::derive(13, stream::kTest));
    for (int trial = 0; trial < 100; ++trial) {
        int len = 1 + static_cast<int>(rng.uniform_index(6));
        Eigen::VectorXd a(len), b(len), q(len);
        for (int j = 0; j < len; ++j) {
            a[j] = rng.normal();
            b[j] = rng.normal();
            q[j] = std::exp(-rng.uniform());
        }
        double s2 = std::exp(rng.normal());
        double gamma = std::exp(0.5 * rng.normal());
        auto family = static_cast<RhoFamily>(rng.uniform_index(3));

        double kab = kernel(a, b, q, s2, gamma, family);
        double kba = kernel(b, a, q, s2, gamma, family);
        REQUIRE(kab == Approx(kba).margin(1e-13));

        // Scalar-by-scalar oracle.
        double lin = 0.0, d2 = 0.0;
        for (int j = 0; j < len; ++j) {
            lin += q[j] * a[j] * b[j];
            d2 += q[j] * (a[j] - b[j]) * (a[j] - b[j]);
        }
        double expect = lin + s2 * rho(family, std::sqrt(d2) / gamma);
        REQUIRE(kab == Approx(expect).margin(1e-12));

        double kaa = kernel(a, a, q, s2, gamma, family);
        REQUIRE(kaa == Approx(a.cwiseProduct(q).dot(a) + s2).margin(1e-12));
    }

    Eigen::VectorXd short_q = Eigen::VectorXd::Ones(2);
    REQUIRE_THROWS_AS(kernel(x, xp, short_q, 1.0, 1.0, RhoFamily::kMatern32),
                      DataError);
}

TEST_CASE("correlation families are valid at zero and decreasing") {
    for (auto family : {RhoFamily::kExponential, RhoFamily::kMatern32,
                        RhoFamily::kSquaredExponential}) {
        REQUIRE(rho(family, 0.0) == 1.0);
        double prev = 1.0;
        for (double t : {0.1, 0.5, 1.0, 2.0, 5.0}) {
            double v = rho(family, t);
            REQUIRE(v < prev);
            REQUIRE(v > 0.0);
            prev = v;
        }
    }
    REQUIRE(parse_rho_family("matern32") == RhoFamily::kMatern32);
    REQUIRE(parse_rho_family(rho_family_name(RhoFamily::kExponential)) ==
            RhoFamily::kExponential);
    REQUIRE_THROWS_AS(parse_rho_family("cubic"), UsageError);
}

TEST_CASE("kernel Gram plus identity admits a Cholesky factorization") {
    Rng rng(Rng::derive(14, stream::kTest));
    for (int trial = 0; trial < 30; ++trial) {
        int n = 2 + static_cast<int>(rng.uniform_index(39));
        int len = 1 + static_cast<int>(rng.uniform_index(8));
        Eigen::MatrixXd X(n, len);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < len; ++j) X(i, j) = rng.normal();
        }
        Eigen::VectorXd q(len);
        for (int j = 0; j < len; ++j) q[j] = std::exp(rng.normal());
        double s2 = std::exp(rng.normal());
        double gamma = std::exp(0.5 * rng.normal());
        auto family = static_cast<RhoFamily>(rng.uniform_index(3));

        Eigen::MatrixXd G(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                G(i, j) = kernel(X.row(i).transpose(), X.row(j).transpose(), q,
                                 s2, gamma, family);
            }
        }
        G.diagonal().array() += 1.0;
        double jitter = 1e-8 * (1.0 + G.diagonal().maxCoeff());
        G.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(G);
        REQUIRE(llt.info() == Eigen::Success);
    }
}

TEST_CASE("nonlinearity variance is non-increasing along an ordering") {
    Rng rng(Rng::derive(15, stream::kTest));
    std::vector<Eigen::MatrixXd> fids(2);
    fids[0].resize(9, 2);
    fids[1].resize(40, 2);
    for (Eigen::Index i = 0; i < 9; ++i) {
        fids[0](i, 0) = rng.uniform();
        fids[0](i, 1) = rng.uniform();
    }
    for (Eigen::Index i = 0; i < 40; ++i) {
        fids[1](i, 0) = rng.uniform();
        fids[1](i, 1) = rng.uniform();
    }
    auto locs = make_locations(std::move(fids));
    auto ord = conditional_maximin(locs);
    HyperParams theta = two_fidelity_theta();
    for (int r = 0; r < 2; ++r) {
        double prev = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < locs.size(r); ++i) {
            double s2 = sigma2(theta, ord.floored(r, i), r);
            REQUIRE(s2 <= prev + 1e-15);
            prev = s2;
        }
    }
}

TEST_CASE("parameter vector round trip per fidelity") {
    HyperParams theta = two_fidelity_theta();
    REQUIRE(theta.total_params() == 16);
    REQUIRE(HyperParams::params_for(0) == 7);
    REQUIRE(HyperParams::params_for(1) == 9);

    Rng rng(Rng::derive(16, stream::kTest));
    for (int r = 0; r < 2; ++r) {
        Eigen::VectorXd v(HyperParams::params_for(r));
        for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = rng.normal();
        theta.from_vector(r, v);
        REQUIRE(theta.to_vector(r) == v);
    }
}
