#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "annuity/model.hpp"

namespace annuity {

struct StateNode {
    int id = 0;
    int n = 0;             ///< stage index
    double mu = 0.0;       ///< mortality force
    double lambda_next = 0.0;  ///< intensity of the next jump (0 at stage N)
    std::vector<std::pair<int, double>> children;  ///< (node id, probability)
};

/// Reachable states of the mortality process, stage by stage in BFS order.
/// Node 0 is the root (0, mu0); duplicate mu values within a stage are merged.
struct StateTree {
    std::vector<StateNode> nodes;
    const StateNode& root() const { return nodes.front(); }
    std::size_t size() const { return nodes.size(); }
    /// ids of the nodes at a given stage, in creation order
    std::vector<int> stage_ids(int n) const;
    /// id of the node at (n, mu); throws InvalidParamError when absent
    int find(int n, double mu) const;
};

StateTree enumerate_states(const ModelConfig& cfg, std::size_t max_nodes = 100000);

/// Subjective unitary annuity value f(n, mu), from the backward recursion
///   f(N, mu) = 1 / (rho + mu)
///   f(n, mu) = [1 + lambda_{n+1} * sum_i p_i f(n+1, z_i)] / r_n(mu).
double annuity_factor(const StateTree& tree, int node_id, const ModelConfig& cfg);

/// Money's worth (rho_hat + mu_hat) * f(n, mu).
double moneys_worth(const StateTree& tree, int node_id, const ModelConfig& cfg);

/// Remaining life expectancy from state (n, mu):
///   E(N, mu) = 1 / mu
///   E(n, mu) = [1 + lambda_{n+1} * sum_i p_i E(n+1, z_i)] / (mu + lambda_{n+1}).
double life_expectancy(const StateTree& tree, int node_id, const ModelConfig& cfg);

/// Whole-tree tables in node-id order (cheaper than per-node calls in loops).
std::vector<double> annuity_factor_table(const StateTree& tree, const ModelConfig& cfg);
std::vector<double> moneys_worth_table(const StateTree& tree, const ModelConfig& cfg);
std::vector<double> life_expectancy_table(const StateTree& tree, const ModelConfig& cfg);

enum class CalibrationMode { Baseline, Objective };

/// Baseline mode: bisect on mu0 so that the root life expectancy matches the
/// target (bracket [1e-6, 1], residual tolerance 1e-10); kernel targets stay
/// fixed. Objective mode: the constant force 1/target.
double calibrate(double target_life_expectancy, CalibrationMode mode, const ModelConfig& cfg);

}  // namespace annuity
