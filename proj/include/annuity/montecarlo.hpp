#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "annuity/model.hpp"
#include "annuity/mortality.hpp"
#include "annuity/solver.hpp"

namespace annuity {

struct SimConfig {
    std::size_t n_paths = 100000;
    double dt = 1.0 / 252.0;  ///< payoff-grid step in years
    double horizon = 0.0;     ///< 0 = auto: e^{-(rho + mu_min) h} < 1e-8
    std::uint64_t seed = 12345;
    bool antithetic = true;   ///< antithetic Brownian draws
    int n_threads = 0;        ///< 0 = hardware concurrency
};

struct PolicyEvalResult {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
};

enum class RuleKind { Never, Immediately, StopAbove, StopBelow, StopInside };

struct StoppingRule {
    RuleKind kind = RuleKind::Never;
    double b1 = 0.0;
    double b2 = 0.0;  ///< upper edge for StopInside
};

/// One stopping rule per tree node (indexed by node id).
struct Policy {
    std::vector<StoppingRule> rules;
};

Policy policy_from_solution(const Solution& sol);

/// Eq. of the expected payoff used by the estimator: the mortality-integrated
/// form discounts by rho + mu_t pathwise and needs no death draw; the raw Cox
/// form simulates the death time explicitly (validation mode).
enum class PayoffEstimator { MortalityIntegrated, RawCox };

struct EvalCase {
    double x0 = 0.0;
    Policy policy;
};

/// Evaluates several (spot, policy) cases on common simulated paths. Results
/// are deterministic for fixed (cfg, sim, seed) regardless of thread count.
std::vector<PolicyEvalResult> evaluate_policies(
    const ModelConfig& cfg, const StateTree& tree, const SimConfig& sim, int start_node,
    const std::vector<EvalCase>& cases,
    PayoffEstimator estimator = PayoffEstimator::MortalityIntegrated);

PolicyEvalResult evaluate_policy(const ModelConfig& cfg, const StateTree& tree,
                                 const SimConfig& sim, int start_node, double x0,
                                 const Policy& policy,
                                 PayoffEstimator estimator = PayoffEstimator::MortalityIntegrated);

struct MomentEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Mean death time over simulated mortality paths (exact inversion of the
/// piecewise-linear hazard integral, no time discretization).
MomentEstimate estimate_life_expectancy(const ModelConfig& cfg, const StateTree& tree,
                                        const SimConfig& sim, int start_node = 0);

/// Monte Carlo of E[int_0^inf e^{-rho u} e^{-Lambda_u} du] (subjective unitary
/// annuity value), exact per path.
MomentEstimate estimate_annuity_factor(const ModelConfig& cfg, const StateTree& tree,
                                       const SimConfig& sim, int start_node = 0);

/// A single materialized trajectory for inspection: wealth at the union of the
/// payoff grid and jump times, the node path and the death time.
struct SimulatedPath {
    std::vector<double> times;
    std::vector<double> wealth;
    std::vector<int> node_ids;
    double death_time = 0.0;
};

SimulatedPath simulate_path(const ModelConfig& cfg, const StateTree& tree,
                            const SimConfig& sim, double x0, std::uint64_t path_index,
                            int start_node = 0);

struct ProbeEntry {
    std::string label;
    double mean = 0.0;
    double std_error = 0.0;
    double diff = 0.0;         ///< variant minus base, common paths
    double diff_std_error = 0.0;
    bool beats_base = false;   ///< diff > 2 * diff_std_error
};

struct ProbeReport {
    PolicyEvalResult base;
    std::vector<ProbeEntry> entries;
    bool pass = true;  ///< no perturbed variant beats the base policy
};

/// Re-evaluates the policy with each threshold shifted by +/- perturbation
/// (relative) on common paths. Threshold-free rules (Never / Immediately) are
/// perturbed into delayed/advanced variants anchored at the spot wealth.
ProbeReport optimality_probe(const ModelConfig& cfg, const StateTree& tree,
                             const SimConfig& sim, const Policy& base, double x0,
                             double perturbation, int start_node = 0);

/// Probe of a solved model at the root.
ProbeReport optimality_probe(const ModelConfig& cfg, const SimConfig& sim,
                             const Solution& sol, double x0, double perturbation);

}  // namespace annuity
