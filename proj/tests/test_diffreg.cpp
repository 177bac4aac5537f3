#include <catch2/catch_amalgamated.hpp>

#include "oracle_helpers.hpp"

using namespace kryct;

namespace {

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// Forward-difference matrix with a zero last row.
Eigen::MatrixXd d1(int n) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) {
        m(i, i) = -1.0;
        m(i, i + 1) = 1.0;
    }
    return m;
}

}  // namespace

TEST_CASE("difference operator matches its Kronecker-product construction") {
    const Dims3 dims{4, 3, 2};
    DiffOperator d(dims);
    const Eigen::MatrixXd got = testutil::dense_from_apply(d);

    const Eigen::MatrixXd ix = Eigen::MatrixXd::Identity(dims.nx, dims.nx);
    const Eigen::MatrixXd iy = Eigen::MatrixXd::Identity(dims.ny, dims.ny);
    const Eigen::MatrixXd iz = Eigen::MatrixXd::Identity(dims.nz, dims.nz);
    const auto m = static_cast<Eigen::Index>(dims.count());
    Eigen::MatrixXd want(3 * m, m);
    want.topRows(m) = kron(iz, kron(iy, d1(dims.nx)));        // x differences
    want.middleRows(m, m) = kron(iz, kron(d1(dims.ny), ix));  // y differences
    want.bottomRows(m) = kron(d1(dims.nz), kron(iy, ix));     // z differences

    CHECK((got - want).cwiseAbs().maxCoeff() == 0.0);
    CHECK((testutil::dense_from_adjoint(d) - want).cwiseAbs().maxCoeff() == 0.0);

    std::mt19937 rng(31);
    CHECK(testutil::adjoint_gap(d, rng) < 1e-13);
}

TEST_CASE("constant volumes have zero differences and M*tau smoothed TV") {
    const Dims3 dims{5, 4, 3};
    DiffOperator d(dims);
    std::vector<double> flat(dims.count(), 0.7);
    const auto grad = d.apply(flat);
    for (double g : grad) CHECK(g == 0.0);
    CHECK(tv(grad) == 0.0);
    const double tau = 1e-3;
    CHECK_THAT(smoothed_tv(grad, tau),
               Catch::Matchers::WithinRel(static_cast<double>(dims.count()) * tau, 1e-13));
}

TEST_CASE("a unit spike has the hand-computed total variation") {
    const Dims3 dims{5, 5, 5};
    DiffOperator d(dims);
    std::vector<double> x(dims.count(), 0.0);
    x[2 + 5 * (2 + 5 * 2)] = 1.0;
    // spike voxel: -1 in all three blocks -> magnitude sqrt(3);
    // each predecessor along an axis: +1 -> magnitude 1
    CHECK_THAT(tv(d.apply(x)), Catch::Matchers::WithinRel(3.0 + std::sqrt(3.0), 1e-13));
}

TEST_CASE("reweighted squared norm reproduces the l1 norm as tau vanishes") {
    std::mt19937 rng(32);
    auto z = testutil::random_vector(3000, rng, -2.0, 2.0);
    const double tau = 1e-12;
    const auto w = smoothed_l1_weights(z, tau);
    double weighted = 0.0, l1 = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        weighted += w[i] * w[i] * z[i] * z[i];
        l1 += std::abs(z[i]);
    }
    CHECK(std::abs(weighted - l1) <= 1e-8 * l1);
}

TEST_CASE("component weights are positive and capped by tau^(-1/2)") {
    std::mt19937 rng(33);
    const auto z = testutil::random_vector(500, rng, -5.0, 5.0);
    const double tau = 1e-3;
    const auto w = smoothed_l1_weights(z, tau);
    for (double wi : w) {
        CHECK(wi > 0.0);
        CHECK(wi <= 1.0 / std::sqrt(tau) + 1e-12);
    }
    CHECK_THROWS_AS(smoothed_l1_weights(z, 0.0), ConfigError);
    CHECK_THROWS_AS(smoothed_l1_weights(z, -1.0), ConfigError);
}

TEST_CASE("TV weights replicate one per-voxel value across the three blocks") {
    const Dims3 dims{4, 4, 4};
    DiffOperator d(dims);
    std::mt19937 rng(34);
    const auto x = testutil::random_vector(dims.count(), rng);
    const auto grad = d.apply(x);
    const auto w = tv_weights(grad, 1e-4);
    const std::size_t m = dims.count();
    const auto mag = gradient_magnitude(grad);
    for (std::size_t v = 0; v < m; ++v) {
        CHECK(w[v] == w[m + v]);
        CHECK(w[v] == w[2 * m + v]);
        const double expect = std::pow(mag[v] * mag[v] + 1e-8, -0.25);
        CHECK_THAT(w[v], Catch::Matchers::WithinRel(expect, 1e-12));
    }
}

TEST_CASE("the weighted quadratic is a tangent majorant of the smoothed TV") {
    const Dims3 dims{4, 4, 3};
    DiffOperator d(dims);
    std::mt19937 rng(35);
    const double tau = 1e-2;

    const auto x_star = testutil::random_vector(dims.count(), rng);
    const auto z_star = d.apply(x_star);
    const auto w = tv_weights(z_star, tau);

    // constant term of the majorant at the expansion point
    double c = 0.0;
    for (double m : gradient_magnitude(z_star)) {
        const double root = std::sqrt(m * m + tau * tau);
        c += root + tau * tau / root;
    }

    auto majorant = [&](std::span<const double> z) {
        double q = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) q += w[i] * w[i] * z[i] * z[i];
        return 0.5 * q + 0.5 * c;
    };

    // equality where the majorant touches
    CHECK_THAT(majorant(z_star), Catch::Matchers::WithinRel(smoothed_tv(z_star, tau), 1e-12));

    // global upper bound elsewhere
    for (int trial = 0; trial < 50; ++trial) {
        const auto z = d.apply(testutil::random_vector(dims.count(), rng, -3.0, 3.0));
        CHECK(majorant(z) >= smoothed_tv(z, tau) * (1.0 - 1e-12));
    }
}

TEST_CASE("the same majorant construction covers the component-wise form") {
    std::mt19937 rng(36);
    const double tau = 0.05;
    const auto z_star = testutil::random_vector(200, rng);
    const auto w = smoothed_l1_weights(z_star, tau);
    double c = 0.0;
    for (double zi : z_star) {
        const double root = std::sqrt(zi * zi + tau * tau);
        c += root + tau * tau / root;
    }
    auto majorant = [&](std::span<const double> z) {
        double q = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) q += w[i] * w[i] * z[i] * z[i];
        return 0.5 * q + 0.5 * c;
    };
    CHECK_THAT(majorant(z_star), Catch::Matchers::WithinRel(smoothed_l1(z_star, tau), 1e-12));
    for (int trial = 0; trial < 50; ++trial) {
        const auto z = testutil::random_vector(200, rng, -4.0, 4.0);
        CHECK(majorant(z) >= smoothed_l1(z, tau) * (1.0 - 1e-12));
    }
}

TEST_CASE("prior-difference weights hit the tau ceiling when x equals the prior") {
    const Dims3 dims{4, 3, 3};
    DiffOperator d(dims);
    std::mt19937 rng(37);
    const auto x = testutil::random_vector(dims.count(), rng);
    const double tau = 1e-4;
    const auto both = piccs_weights(d, x, x, tau);
    CHECK(both.w_tv.size() == 3 * dims.count());
    REQUIRE(both.w_prior.size() == 3 * dims.count());
    for (double w : both.w_prior)
        CHECK_THAT(w, Catch::Matchers::WithinRel(1.0 / std::sqrt(tau), 1e-12));
    // and the TV part matches the plain weights of x
    const auto w_plain = tv_weights(d.apply(x), tau);
    CHECK(both.w_tv == w_plain);
}

TEST_CASE("gradient fields must have 3*M layout") {
    std::vector<double> bad(10, 1.0);
    CHECK_THROWS_AS(gradient_magnitude(bad), ConfigError);
    CHECK_THROWS_AS(tv(bad), ConfigError);
    CHECK_THROWS_AS(tv_weights(bad, 1e-4), ConfigError);
}

TEST_CASE("prior-difference weights ignore a global intensity shift") {
    const Dims3 dims{4, 4, 3};
    DiffOperator d(dims);
    std::mt19937 rng(38);
    const auto x = testutil::random_vector(dims.count(), rng, 0.0, 1.0);
    const auto prior = testutil::random_vector(dims.count(), rng, 0.0, 1.0);
    const double tau = 1e-4;

    const auto base = piccs_weights(d, x, prior, tau);
    std::vector<double> x_up(x), prior_up(prior);
    for (double& v : x_up) v += 0.375;
    for (double& v : prior_up) v += 0.375;
    const auto shifted = piccs_weights(d, x_up, prior_up, tau);

    REQUIRE(shifted.w_prior.size() == base.w_prior.size());
    for (std::size_t i = 0; i < base.w_prior.size(); ++i)
        CHECK_THAT(shifted.w_prior[i], Catch::Matchers::WithinRel(base.w_prior[i], 1e-10));
}
