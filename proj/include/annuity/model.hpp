#pragma once

#include <vector>

#include "annuity/common.hpp"

namespace annuity {

/// Market, preference and insurer parameters. All rates are annual.
struct MarketParams {
    double theta = 0.0;    ///< fund drift
    double alpha = 0.0;    ///< dividend rate, >= 0
    double sigma = 0.0;    ///< volatility, > 0
    double rho = 0.0;      ///< subjective discount rate, > 0
    double rho_hat = 0.0;  ///< insurer guaranteed rate, > 0
    double mu_hat = 0.0;   ///< objective mortality force, > 0
    double K = 0.0;        ///< annuitization fee (signed, currency units)
    double nu = 0.0;       ///< bequest weight in [0, 1]
};

struct KernelTarget {
    double mu = 0.0;
    double prob = 0.0;
};

struct KernelEntry {
    int from_stage = 0;
    double from_mu = 0.0;
    std::vector<KernelTarget> targets;
};

/// Piecewise-deterministic mortality specification. The kernel maps a state
/// (stage n, mortality mu) to a finite discrete distribution over post-jump
/// mortality values. mu_min/mu_max are recomputed from the reachable set by
/// validate_config and should not be trusted from input.
struct PdmpSpec {
    int N = 0;                         ///< maximum number of jumps
    std::vector<double> lambdas;       ///< jump intensities lambda_1..lambda_N
    double mu0 = 0.0;                  ///< initial mortality force
    std::vector<KernelEntry> kernel;
    double mu_min = 0.0;
    double mu_max = 0.0;
};

struct ModelConfig {
    MarketParams market;
    PdmpSpec pdmp;
};

/// Checks all parameter ranges, kernel distributions and the well-posedness
/// condition theta - alpha - rho - mu_min < 0 against the actual reachable
/// mortality values. Returns the config with mu_min/mu_max filled in.
///
/// Throws InvalidParamError, InvalidDistributionError or IllPosedError.
ModelConfig validate_config(ModelConfig cfg);

/// lambda_{n+1}, with lambda_{N+1} = 0.
double lambda_after(const ModelConfig& cfg, int n);

/// r_n(mu) = rho + mu + lambda_{n+1}.
double effective_rate(const ModelConfig& cfg, int n, double mu);

/// (alpha + nu*mu) / (r_n(mu) + alpha - theta); the per-unit-wealth value of
/// dividends plus bequest while never annuitizing.
double beta(const ModelConfig& cfg, int n, double mu);

/// Post-jump distribution for state (n, mu); mu matched within 1e-9 relative.
/// Throws InvalidDistributionError when no entry exists.
const std::vector<KernelTarget>& kernel_lookup(const ModelConfig& cfg, int n, double mu);

/// All mortality values reachable from (0, mu0), stage by stage (deduplicated).
std::vector<std::vector<double>> reachable_mus(const ModelConfig& cfg);

}  // namespace annuity
