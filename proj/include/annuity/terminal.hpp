#pragma once

#include <optional>

#include "annuity/diffusion.hpp"
#include "annuity/model.hpp"

namespace annuity {

enum class TerminalRegime {
    NeverStop,         ///< K > 0, f_hat <= beta
    StopAbove,         ///< K > 0, f_hat > beta; threshold x_star
    StopBelow,         ///< K < 0, f_hat < beta; threshold x_star_star
    StopEverywhere,    ///< K < 0, f_hat >= beta
    K0NeverStop,       ///< K = 0, L > 0 (only {0} is a stopping point)
    K0StopEverywhere,  ///< K = 0, L <= 0
};

/// Closed-form solution of the constant-mortality stopping problem.
struct TerminalSolution {
    double mu = 0.0;
    TerminalRegime regime = TerminalRegime::NeverStop;
    std::optional<double> x_star;       ///< upper threshold (StopAbove)
    std::optional<double> x_star_star;  ///< lower threshold (StopBelow)
    double zeta = 0.0;                  ///< power-term coefficient when a threshold exists
    double f_hat = 0.0;
    double beta = 0.0;
    double gamma_plus = 0.0;
    double gamma_minus = 0.0;
    double rate = 0.0;  ///< r_N(mu) = rho + mu
    double K = 0.0;
    double k0_slope = 0.0;  ///< value slope f_hat + [L]^+/(r + alpha - theta) when K = 0
};

TerminalSolution solve_terminal(const ModelConfig& cfg, double mu);

double value_terminal(const TerminalSolution& sol, double x);

/// dV/dx; one-sided from the continuation branch at thresholds.
double value_terminal_derivative(const TerminalSolution& sol, double x);

}  // namespace annuity
