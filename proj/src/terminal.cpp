#include "annuity/terminal.hpp"

#include <cmath>

namespace annuity {

namespace {

// zeta = (f K / (g - 1))^{1 - g} * ((f - b) / g)^{g}, evaluated in log space.
// Both bases are positive in the regimes where a threshold exists.
double zeta_log_space(double f_hat, double K, double gamma, double gap) {
    const double base1 = f_hat * K / (gamma - 1.0);
    const double base2 = gap / gamma;
    return std::exp((1.0 - gamma) * std::log(base1) + gamma * std::log(base2));
}

}  // namespace

TerminalSolution solve_terminal(const ModelConfig& cfg, double mu) {
    const MarketParams& m = cfg.market;
    TerminalSolution sol;
    sol.mu = mu;
    sol.K = m.K;
    sol.rate = effective_rate(cfg, cfg.pdmp.N, mu);
    sol.f_hat = (m.rho_hat + m.mu_hat) / sol.rate;
    sol.beta = beta(cfg, cfg.pdmp.N, mu);
    const GbmRoots roots = characteristic_roots(m, sol.rate);
    sol.gamma_plus = roots.gamma_plus;
    sol.gamma_minus = roots.gamma_minus;

    const double gap = sol.f_hat - sol.beta;
    if (m.K > 0.0) {
        if (gap > 0.0) {
            sol.regime = TerminalRegime::StopAbove;
            sol.x_star = sol.f_hat * m.K * sol.gamma_plus /
                         ((sol.gamma_plus - 1.0) * gap);
            sol.zeta = zeta_log_space(sol.f_hat, m.K, sol.gamma_plus, gap);
        } else {
            sol.regime = TerminalRegime::NeverStop;
        }
    } else if (m.K < 0.0) {
        if (gap < 0.0) {
            sol.regime = TerminalRegime::StopBelow;
            sol.x_star_star = sol.f_hat * m.K * sol.gamma_minus /
                              ((sol.gamma_minus - 1.0) * gap);
            sol.zeta = zeta_log_space(sol.f_hat, m.K, sol.gamma_minus, gap);
        } else {
            sol.regime = TerminalRegime::StopEverywhere;
        }
    } else {
        const double L = gap * (m.theta - m.alpha - sol.rate);
        const double denom = sol.rate + m.alpha - m.theta;
        sol.k0_slope = sol.f_hat + std::max(L, 0.0) / denom;
        sol.regime = L > 0.0 ? TerminalRegime::K0NeverStop
                             : TerminalRegime::K0StopEverywhere;
    }
    return sol;
}

double value_terminal(const TerminalSolution& sol, double x) {
    if (!(x >= 0.0)) throw InvalidParamError("value_terminal needs x >= 0");
    switch (sol.regime) {
        case TerminalRegime::NeverStop:
            return sol.beta * x;
        case TerminalRegime::StopAbove:
            if (x < *sol.x_star)
                return sol.beta * x + sol.zeta * std::pow(x, sol.gamma_plus);
            return sol.f_hat * (x - sol.K);
        case TerminalRegime::StopBelow:
            if (x <= *sol.x_star_star) return sol.f_hat * (x - sol.K);
            return sol.beta * x + sol.zeta * std::pow(x, sol.gamma_minus);
        case TerminalRegime::StopEverywhere:
            return sol.f_hat * (x - sol.K);
        case TerminalRegime::K0NeverStop:
        case TerminalRegime::K0StopEverywhere:
            return sol.k0_slope * x;
    }
    throw std::logic_error("unreachable");
}

double value_terminal_derivative(const TerminalSolution& sol, double x) {
    if (!(x > 0.0)) throw InvalidParamError("value_terminal_derivative needs x > 0");
    switch (sol.regime) {
        case TerminalRegime::NeverStop:
            return sol.beta;
        case TerminalRegime::StopAbove:
            if (x < *sol.x_star)
                return sol.beta +
                       sol.zeta * sol.gamma_plus * std::pow(x, sol.gamma_plus - 1.0);
            return sol.f_hat;
        case TerminalRegime::StopBelow:
            if (x <= *sol.x_star_star) return sol.f_hat;
            return sol.beta +
                   sol.zeta * sol.gamma_minus * std::pow(x, sol.gamma_minus - 1.0);
        case TerminalRegime::StopEverywhere:
            return sol.f_hat;
        case TerminalRegime::K0NeverStop:
        case TerminalRegime::K0StopEverywhere:
            return sol.k0_slope;
    }
    throw std::logic_error("unreachable");
}

}  // namespace annuity
