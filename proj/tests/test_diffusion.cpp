#include <doctest.h>

#include <cmath>
#include <random>

#include "annuity/common.hpp"
#include "annuity/config_io.hpp"
#include "annuity/diffusion.hpp"

using namespace annuity;

namespace {

MarketParams table_market() { return case_study_config().market; }

double char_poly(const MarketParams& m, double r, double g) {
    return 0.5 * m.sigma * m.sigma * g * (g - 1.0) + (m.theta - m.alpha) * g - r;
}

}  // namespace

TEST_CASE("characteristic roots: symmetric case") {
    MarketParams m;
    m.sigma = std::sqrt(2.0);
    m.theta = 1.0;
    m.alpha = 0.0;
    // 1/2 - (theta-alpha)/sigma^2 = 0, so gamma = +-sqrt(2r/sigma^2)
    const GbmRoots roots = characteristic_roots(m, 4.0);
    CHECK(roots.gamma_plus == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(roots.gamma_minus == doctest::Approx(-2.0).epsilon(1e-14));
}

TEST_CASE("characteristic roots: polynomial residual oracle") {
    const MarketParams m = table_market();
    for (double r : {0.085023, 0.129646, 0.185023, 0.5, 1.2}) {
        const GbmRoots roots = characteristic_roots(m, r);
        CHECK(std::fabs(char_poly(m, r, roots.gamma_plus)) <= 1e-12 * std::max(1.0, r));
        CHECK(std::fabs(char_poly(m, r, roots.gamma_minus)) <= 1e-12 * std::max(1.0, r));
        CHECK(roots.gamma_plus > 1.0);
        CHECK(roots.gamma_minus < 0.0);
    }
    CHECK(characteristic_roots(m, 0.085023).gamma_plus ==
          doctest::Approx(2.14).epsilon(5e-3));
}

TEST_CASE("characteristic roots: gamma_plus -> 1 as r -> theta - alpha") {
    const MarketParams m = table_market();
    const double drift = m.theta - m.alpha;
    const GbmRoots roots = characteristic_roots(m, drift + 1e-10);
    CHECK(roots.gamma_plus == doctest::Approx(1.0).epsilon(1e-5));
    CHECK_THROWS_AS(characteristic_roots(m, drift), InvalidParamError);
}

TEST_CASE("resolvent affine closed form") {
    const MarketParams m = table_market();
    const double r = 0.185023;
    // constant payoff discounts to c / r
    CHECK(resolvent_affine(m, r, 3.7, 0.0, 123.0) ==
          doctest::Approx(3.7 / r).epsilon(1e-14));
    // matches the beta integral: g(y) = (alpha + nu mu) y at x = 1
    const double mu0 = 0.044623;
    const double coef = m.alpha + 0.35 * mu0;
    const double beta_expected = coef / (r + m.alpha - m.theta);
    CHECK(resolvent_affine(m, r, 0.0, coef, 1.0) ==
          doctest::Approx(beta_expected).epsilon(1e-14));
}

TEST_CASE("quadrature reproduces the affine closed form") {
    const MarketParams m = table_market();
    const double r = 0.185023;
    std::mt19937_64 gen(20240811);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    const auto xs = log_spaced(0.05, 5e4, 50);
    for (int k = 0; k < 10; ++k) {
        const double a = 1e3 * coef(gen), b = coef(gen);
        auto g = [a, b](double y) { return a + b * y; };
        for (double x : xs) {
            const double exact = resolvent_affine(m, r, a, b, x);
            const double quad = resolvent_quadrature(m, r, g, x);
            CHECK(std::fabs(quad - exact) <=
                  1e-6 * std::max({1.0, std::fabs(exact)}));
        }
    }
}

TEST_CASE("quadrature reproduces the quadratic moment formula") {
    const MarketParams m = table_market();
    // E_x[X_t^2] = x^2 e^{(2(theta-alpha)+sigma^2) t}; need r above that rate
    const double growth2 = 2.0 * (m.theta - m.alpha) + m.sigma * m.sigma;
    const double r = growth2 + 0.05;
    auto g = [](double y) { return y * y; };
    for (double x : log_spaced(0.1, 100.0, 50)) {
        const double exact = x * x / (r - growth2);
        const double quad = resolvent_quadrature(m, r, g, x);
        CHECK(std::fabs(quad - exact) <= 1e-5 * std::fabs(exact));
    }
}

TEST_CASE("quadrature flags a divergent integrand") {
    const MarketParams m = table_market();
    const double growth2 = 2.0 * (m.theta - m.alpha) + m.sigma * m.sigma;
    auto g = [](double y) { return y * y; };
    CHECK_THROWS_AS(resolvent_quadrature(m, growth2 * 0.9, g, 1.0),
                    NonIntegrableError);
}

TEST_CASE("resolvent linearity and positivity") {
    const MarketParams m = table_market();
    const double r = 0.13;
    auto g1 = [](double y) { return 2.0 + y; };
    auto g2 = [](double y) { return 0.5 * y; };
    auto combo = [&](double y) { return 3.0 * g1(y) - 2.0 * g2(y); };
    for (double x : {0.5, 20.0, 800.0}) {
        const double lhs = resolvent_quadrature(m, r, combo, x);
        const double rhs = 3.0 * resolvent_quadrature(m, r, g1, x) -
                           2.0 * resolvent_quadrature(m, r, g2, x);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
        CHECK(resolvent_quadrature(m, r, g1, x) > 0.0);
    }
}

TEST_CASE("green resolvent solves (L - r) u = -g by finite differences") {
    const MarketParams m = table_market();
    const double r = 0.185023;
    auto g = [](double y) { return 5.0 + 2.0 * y + 40.0 * std::sqrt(y); };
    const auto knots = log_spaced(0.05, 5e4, 600);
    // sqrt has sublinear tails; linearize outside the knot range
    const double x_lo = knots.front(), x_hi = knots.back();
    const double g0 = g(x_lo) - x_lo * (g(x_lo * 1.001) - g(x_lo)) / (0.001 * x_lo);
    const double s0 = (g(x_lo * 1.001) - g(x_lo)) / (0.001 * x_lo);
    const double s1 = (g(x_hi) - g(x_hi * 0.999)) / (0.001 * x_hi);
    const double c1 = g(x_hi) - s1 * x_hi;
    GreenResolvent res(m, r, g, knots, g0, s0, c1, s1);

    const auto u = res.values_at_knots();
    const double h = std::log(knots[1] / knots[0]);
    double worst = 0.0;
    for (std::size_t i = 2; i + 2 < knots.size(); ++i) {
        const double vu = (-u[i + 2] + 8 * u[i + 1] - 8 * u[i - 1] + u[i - 2]) / (12 * h);
        const double vuu =
            (-u[i + 2] + 16 * u[i + 1] - 30 * u[i] + 16 * u[i - 1] - u[i - 2]) /
            (12 * h * h);
        const double gen =
            0.5 * m.sigma * m.sigma * (vuu - vu) + (m.theta - m.alpha) * vu;
        const double res_i = gen - r * u[i] + g(knots[i]);
        const double scale = std::max({std::fabs(r * u[i]), std::fabs(g(knots[i])), 1.0});
        worst = std::max(worst, std::fabs(res_i) / scale);
    }
    CHECK(worst <= 1e-3);
}

TEST_CASE("green resolvent value/derivative agree with one-off quadrature") {
    const MarketParams m = table_market();
    const double r = 0.185023;
    auto g = [](double y) { return 1.0 + 0.3 * y; };
    const auto knots = log_spaced(0.1, 1e4, 200);
    GreenResolvent res(m, r, g, knots, 1.0, 0.3, 1.0, 0.3);
    for (double x : {0.3, 7.0, 250.0, 9000.0}) {
        const double exact = resolvent_affine(m, r, 1.0, 0.3, x);
        CHECK(res.value(x) == doctest::Approx(exact).epsilon(1e-8));
        const double slope_exact = 0.3 / (r + m.alpha - m.theta);
        CHECK(res.derivative(x) == doctest::Approx(slope_exact).epsilon(1e-6));
    }
}
