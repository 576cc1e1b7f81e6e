#pragma once

#include <string>
#include <vector>

#include "annuity/montecarlo.hpp"
#include "annuity/solver.hpp"

namespace annuity {

struct CheckRecord {
    std::string check;
    int node_id = 0;
    double max_violation = 0.0;  ///< normalized; pass when <= tolerance
    double tolerance = 0.0;
    bool pass = true;
};

struct VerifyReport {
    std::vector<CheckRecord> records;
    bool all_pass() const;
    std::string to_json() const;
    std::string to_table() const;
};

/// Runs the structural invariant suite on a solved model, node by node:
///  1 obstacle domination W >= 0
///  2 smooth fit at interior thresholds (<= 1e-4 relative)
///  3 ODE residual in continuation interiors (<= 1e-3 relative)
///  4 convexity / monotonicity of V
///  5 asymptotic slope at the grid edge (<= 1%)
///  6 money's-worth inequality (strict)
///  7 linear growth bound V <= L (1 + x)
///  8 Monte Carlo agreement at 5 spot wealths (<= 2 standard errors)
///  9 regime tag vs sign pattern of W
/// 10 sign of M(0) equals sign of K
/// Failures are report entries, never exceptions.
VerifyReport run_suite(const ModelConfig& cfg, const Solution& sol, const SimConfig& sim);

}  // namespace annuity
