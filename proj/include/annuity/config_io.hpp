#pragma once

#include <string>

#include "annuity/model.hpp"

namespace annuity {

/// Parses a model configuration from JSON text. Field names: theta, alpha,
/// sigma, rho, rho_hat, mu_hat, K, nu, N, lambdas (array), mu0, kernel (array
/// of {from_stage, from_mu, targets: [{mu, prob}]}). The result is validated.
ModelConfig parse_config(const std::string& json_text);

ModelConfig load_config(const std::string& path);

std::string config_to_json(const ModelConfig& cfg);

/// Built-in single-health-shock example configuration: calibrated baseline
/// mortality 0.044623 doubling with probability 0.8 at one Exp(0.1) shock,
/// S&P-calibrated market parameters. K and nu are scenario knobs.
ModelConfig case_study_config(double K = 1500.0, double nu = 0.35);

}  // namespace annuity
