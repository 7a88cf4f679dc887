#include "helpers.hpp"
#include "nonlocal_dp/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace nldp;

TEST_CASE("gauss hermite rules integrate gaussian moments") {
    const auto rule = gauss_hermite(64);
    double m0 = 0, m2 = 0, m4 = 0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        m0 += rule.weights[i];
        m2 += rule.weights[i] * rule.nodes[i] * rule.nodes[i];
        m4 += rule.weights[i] * std::pow(rule.nodes[i], 4);
    }
    CHECK(m0 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("gaussian semigroup closed forms") {
    const SpaceGrid grid = test::grid1d(-6.0, 6.0, 61);
    Payoff quadratic;
    quadratic.family = PayoffFamily::Quadratic;
    quadratic.center = Vec::Zero(1);

    SUBCASE("tau = 0 returns the payoff") {
        CHECK(gaussian_semigroup(quadratic, grid, Mat::Identity(1, 1), Vec::Zero(1), 0.0,
                                 Vec::Constant(1, 1.3)) == doctest::Approx(1.69));
    }
    SUBCASE("second moment") {
        for (double x : {-2.0, 0.0, 0.7}) {
            for (double tau : {0.1, 0.5, 1.0}) {
                CHECK(gaussian_semigroup(quadratic, grid, Mat::Identity(1, 1), Vec::Zero(1), tau,
                                         Vec::Constant(1, x)) ==
                      doctest::Approx(x * x + tau).epsilon(1e-10));
            }
        }
    }
    SUBCASE("half normal mean of the absolute payoff") {
        Payoff abs;
        abs.family = PayoffFamily::Absolute;
        abs.center = Vec::Zero(1);
        const double tau = 0.37;
        CHECK(gaussian_semigroup(abs, grid, Mat::Identity(1, 1), Vec::Zero(1), tau,
                                 Vec::Zero(1)) ==
              doctest::Approx(std::sqrt(2.0 * tau / M_PI)).epsilon(1e-9));
    }
    SUBCASE("drift shifts the mean") {
        Payoff call;
        call.family = PayoffFamily::Call;
        call.strike = 0.0;
        // E max(x + b tau + sqrt(tau) Z, 0) with the Bachelier closed form
        const double tau = 0.25, b = 1.2, x = -0.1;
        const double m = x + b * tau, s = std::sqrt(tau);
        const double d = m / s;
        const double phi = std::exp(-0.5 * d * d) / std::sqrt(2.0 * M_PI);
        const double Phi = 0.5 * std::erfc(-d / std::sqrt(2.0));
        CHECK(gaussian_semigroup(call, grid, Mat::Identity(1, 1), Vec::Constant(1, b), tau,
                                 Vec::Constant(1, x)) ==
              doctest::Approx(m * Phi + s * phi).epsilon(1e-9));
    }
    SUBCASE("two dimensional quadratic picks up the trace") {
        SpaceGrid g2;
        g2.n = 2;
        g2.lower = Vec::Constant(2, -6.0);
        g2.upper = Vec::Constant(2, 6.0);
        g2.M = {11, 11};
        Payoff q2;
        q2.family = PayoffFamily::Quadratic;
        q2.center = Vec::Zero(2);
        Mat a(2, 2);
        a << 1.0, 0.3, 0.3, 0.5;
        Vec x(2);
        x << 0.4, -0.2;
        const double tau = 0.3;
        CHECK(gaussian_semigroup(q2, g2, a, Vec::Zero(2), tau, x) ==
              doctest::Approx(x.squaredNorm() + tau * a.trace()).epsilon(1e-9));
    }
}

TEST_CASE("semigroup law under composition") {
    const SpaceGrid grid = test::grid1d(-8.0, 8.0, 161);
    Payoff call;
    call.family = PayoffFamily::Call;
    call.strike = 0.3;
    call.width = 0.2;
    const Mat a = Mat::Constant(1, 1, 0.8);
    const double tau1 = 0.2, tau2 = 0.3;

    const auto inner = [&](const Vec& p) {
        return gaussian_semigroup(call, grid, a, Vec::Zero(1), tau2, p);
    };
    for (double x : {-0.5, 0.0, 0.9}) {
        const double direct =
            gaussian_semigroup(call, grid, a, Vec::Zero(1), tau1 + tau2, Vec::Constant(1, x));
        const double composed =
            gaussian_semigroup(inner, a, Vec::Zero(1), tau1, Vec::Constant(1, x));
        CHECK(std::abs(direct - composed) <= 1e-8);
    }
}

TEST_CASE("extremal variance reference") {
    const SpaceGrid grid = test::grid1d(-6.0, 6.0, 61);
    Payoff convex;
    convex.family = PayoffFamily::Quadratic;
    convex.center = Vec::Zero(1);

    SUBCASE("convex payoff prices at the upper variance") {
        CHECK(g_heat_reference(convex, grid, 0.25, 1.0, 0.5, Vec::Zero(1)) ==
              doctest::Approx(0.5).epsilon(1e-10));
    }
    SUBCASE("concave payoff prices at the lower variance") {
        Payoff concave = convex;
        concave.scale = -1.0;
        CHECK(g_heat_reference(concave, grid, 0.25, 1.0, 0.5, Vec::Constant(1, 1.0)) ==
              doctest::Approx(-(1.0 + 0.25 * 0.5)).epsilon(1e-10));
    }
    SUBCASE("affine payoff ties the two branches") {
        Payoff affine;
        affine.family = PayoffFamily::Call;
        affine.strike = -100.0;  // linear on the whole probed range
        const double lo = gaussian_semigroup(affine, grid, Mat::Constant(1, 1, 0.25),
                                             Vec::Zero(1), 0.5, Vec::Constant(1, 0.7));
        const double hi = gaussian_semigroup(affine, grid, Mat::Constant(1, 1, 1.0), Vec::Zero(1),
                                             0.5, Vec::Constant(1, 0.7));
        CHECK(lo == doctest::Approx(hi).epsilon(1e-10));
        CHECK(g_heat_reference(affine, grid, 0.25, 1.0, 0.5, Vec::Constant(1, 0.7)) ==
              doctest::Approx(hi).epsilon(1e-10));
    }
    SUBCASE("unflagged payoff is refused") {
        Payoff table;
        table.family = PayoffFamily::Table;
        table.table = Vec::Zero(grid.n_cells());
        CHECK_THROWS_AS(g_heat_reference(table, grid, 0.25, 1.0, 0.5, Vec::Zero(1)), Error);
    }
}
