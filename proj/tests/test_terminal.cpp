#include <doctest.h>

#include <cmath>

#include "annuity/common.hpp"
#include "annuity/config_io.hpp"
#include "annuity/terminal.hpp"

using namespace annuity;

namespace {

const double kMu0 = 0.044623;

TerminalSolution solve_for(double K, double nu, double mu) {
    return solve_terminal(case_study_config(K, nu), mu);
}

}  // namespace

TEST_CASE("terminal thresholds match the reference values (K > 0)") {
    const TerminalSolution s1 = solve_for(1500.0, 0.35, kMu0);
    REQUIRE(s1.regime == TerminalRegime::StopAbove);
    REQUIRE(s1.x_star.has_value());
    CHECK(std::fabs(*s1.x_star - 32772.84) / 32772.84 < 5e-3);

    const TerminalSolution s2 = solve_for(1500.0, 0.35, 2 * kMu0);
    REQUIRE(s2.regime == TerminalRegime::StopAbove);
    REQUIRE(s2.x_star.has_value());
    CHECK(std::fabs(*s2.x_star - 49028.47) / 49028.47 < 5e-3);

    CHECK(s1.x_star < s2.x_star);
}

TEST_CASE("terminal regime table") {
    // K > 0 with f_hat <= beta: nu = 1 pushes beta above f_hat at high mu
    const TerminalSolution never = solve_for(1500.0, 1.0, 2 * kMu0);
    CHECK(never.f_hat <= never.beta);
    CHECK(never.regime == TerminalRegime::NeverStop);

    // K < 0 mirror cases
    const TerminalSolution below = solve_for(-1500.0, 0.6, kMu0);
    CHECK(below.f_hat < below.beta);
    CHECK(below.regime == TerminalRegime::StopBelow);
    CHECK(below.x_star_star.has_value());

    const TerminalSolution everywhere = solve_for(-1500.0, 0.0, kMu0);
    CHECK(everywhere.f_hat >= everywhere.beta);
    CHECK(everywhere.regime == TerminalRegime::StopEverywhere);
}

TEST_CASE("terminal value function evaluation") {
    const TerminalSolution s = solve_for(1500.0, 0.35, kMu0);
    const double xs = *s.x_star;

    // continuity at the threshold
    const double cont = s.beta * xs + s.zeta * std::pow(xs, s.gamma_plus);
    const double stop = s.f_hat * (xs - s.K);
    CHECK(cont == doctest::Approx(stop).epsilon(1e-10));
    CHECK(value_terminal(s, xs * (1 - 1e-9)) ==
          doctest::Approx(value_terminal(s, xs * (1 + 1e-9))).epsilon(1e-7));

    // strictly above the obstacle below the threshold (b* from the staged
    // problem sits inside the continuation region here)
    const double b_star = 20383.66;
    CHECK(value_terminal(s, b_star) > s.f_hat * (b_star - s.K));

    // zero wealth
    CHECK(value_terminal(s, 0.0) == 0.0);
    const TerminalSolution sb = solve_for(-1500.0, 0.6, kMu0);
    CHECK(value_terminal(sb, 0.0) == doctest::Approx(sb.f_hat * 1500.0));
}

TEST_CASE("terminal smooth fit") {
    for (const TerminalSolution& s :
         {solve_for(1500.0, 0.35, kMu0), solve_for(1500.0, 0.35, 2 * kMu0)}) {
        const double xs = *s.x_star;
        const double slope_cont = s.beta + s.zeta * s.gamma_plus *
                                               std::pow(xs, s.gamma_plus - 1.0);
        CHECK(std::fabs(slope_cont - s.f_hat) <= 1e-9 * s.f_hat);
    }
    const TerminalSolution sb = solve_for(-1500.0, 0.6, 2 * kMu0);
    const double xss = *sb.x_star_star;
    const double slope_cont =
        sb.beta + sb.zeta * sb.gamma_minus * std::pow(xss, sb.gamma_minus - 1.0);
    CHECK(std::fabs(slope_cont - sb.f_hat) <= 1e-9 * sb.f_hat);
}

TEST_CASE("terminal value dominates the obstacle on a log grid") {
    for (const TerminalSolution& s :
         {solve_for(1500.0, 0.35, kMu0), solve_for(-1500.0, 0.6, 2 * kMu0)}) {
        for (double x : log_spaced(1.0, 1e7, 1000)) {
            const double obstacle = s.f_hat * (x - s.K);
            CHECK(value_terminal(s, x) >= obstacle - 1e-9 * std::fabs(obstacle));
        }
    }
}

TEST_CASE("terminal convexity and monotonicity") {
    for (const TerminalSolution& s :
         {solve_for(1500.0, 0.35, kMu0), solve_for(-1500.0, 0.6, 2 * kMu0)}) {
        const auto xs = log_spaced(10.0, 1e6, 800);
        double prev_slope = -1e100;
        double scale = 1.0;
        for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
            const double slope = (value_terminal(s, xs[i + 1]) - value_terminal(s, xs[i])) /
                                 (xs[i + 1] - xs[i]);
            scale = std::max(scale, std::fabs(slope));
            CHECK(slope >= -1e-9 * scale);
            CHECK(slope >= prev_slope - 1e-9 * scale);
            prev_slope = slope;
        }
    }
}

TEST_CASE("terminal asymptotic slope") {
    const double x_big = 1e8;
    for (double nu : {0.35, 0.6}) {
        for (double K : {1500.0, -1500.0}) {
            for (double mu : {kMu0, 2 * kMu0}) {
                const TerminalSolution s = solve_for(K, nu, mu);
                const double limit = std::max(s.f_hat, s.beta);
                CHECK(std::fabs(value_terminal(s, x_big) / x_big - limit) < 1e-4);
            }
        }
    }
}

TEST_CASE("terminal ODE residual in the continuation region") {
    const ModelConfig cfg = case_study_config(1500.0, 0.35);
    const TerminalSolution s = solve_terminal(cfg, kMu0);
    const MarketParams& m = cfg.market;
    const double coef = m.alpha + m.nu * kMu0;
    const double h = 1e-4;
    double worst = 0.0;
    for (double x : log_spaced(50.0, *s.x_star * 0.98, 200)) {
        // five-point stencil in log space
        const double u = std::log(x);
        auto v = [&](double uu) { return value_terminal(s, std::exp(uu)); };
        const double vu =
            (-v(u + 2 * h) + 8 * v(u + h) - 8 * v(u - h) + v(u - 2 * h)) / (12 * h);
        const double vuu = (-v(u + 2 * h) + 16 * v(u + h) - 30 * v(u) +
                            16 * v(u - h) - v(u - 2 * h)) /
                           (12 * h * h);
        const double gen =
            0.5 * m.sigma * m.sigma * (vuu - vu) + (m.theta - m.alpha) * vu;
        const double res = gen - s.rate * v(u) + coef * x;
        const double scale = std::max({std::fabs(s.rate * v(u)), std::fabs(coef * x), 1.0});
        worst = std::max(worst, std::fabs(res) / scale);
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("terminal K = 0 closed form") {
    // L > 0 iff f_hat < beta: continuation on (0, inf), slope collapses to beta
    const TerminalSolution cont = solve_for(0.0, 0.6, kMu0);
    CHECK(cont.f_hat < cont.beta);
    CHECK(cont.regime == TerminalRegime::K0NeverStop);
    CHECK(cont.k0_slope == doctest::Approx(cont.beta).epsilon(1e-12));
    CHECK(value_terminal(cont, 2.0) == doctest::Approx(2.0 * cont.beta));

    // L <= 0 iff f_hat >= beta: stop everywhere, value f_hat x
    const TerminalSolution stop = solve_for(0.0, 0.0, kMu0);
    CHECK(stop.f_hat >= stop.beta);
    CHECK(stop.regime == TerminalRegime::K0StopEverywhere);
    CHECK(stop.k0_slope == doctest::Approx(stop.f_hat).epsilon(1e-12));
}
