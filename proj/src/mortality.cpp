#include "annuity/mortality.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace annuity {

namespace {

constexpr double kMergeRel = 1e-12;

bool mu_merge(double a, double b) {
    return std::fabs(a - b) <= kMergeRel * std::max({1.0, std::fabs(a), std::fabs(b)});
}

}  // namespace

std::vector<int> StateTree::stage_ids(int n) const {
    std::vector<int> out;
    for (const auto& node : nodes)
        if (node.n == n) out.push_back(node.id);
    return out;
}

int StateTree::find(int n, double mu) const {
    for (const auto& node : nodes)
        if (node.n == n && mu_merge(node.mu, mu)) return node.id;
    std::ostringstream os;
    os << "no tree node at (n=" << n << ", mu=" << mu << ")";
    throw InvalidParamError(os.str());
}

StateTree enumerate_states(const ModelConfig& cfg, std::size_t max_nodes) {
    StateTree tree;
    tree.nodes.push_back(StateNode{0, 0, cfg.pdmp.mu0, lambda_after(cfg, 0), {}});
    std::vector<int> frontier{0};
    for (int n = 0; n < cfg.pdmp.N; ++n) {
        std::vector<int> next;
        for (int id : frontier) {
            const double mu = tree.nodes[static_cast<std::size_t>(id)].mu;
            const auto& targets = kernel_lookup(cfg, n, mu);
            for (const auto& t : targets) {
                int child_id = -1;
                for (int c : next)
                    if (mu_merge(tree.nodes[static_cast<std::size_t>(c)].mu, t.mu)) {
                        child_id = c;
                        break;
                    }
                if (child_id < 0) {
                    child_id = static_cast<int>(tree.nodes.size());
                    if (tree.nodes.size() + 1 > max_nodes)
                        throw TreeTooLargeError("state tree exceeds the node cap");
                    tree.nodes.push_back(
                        StateNode{child_id, n + 1, t.mu, lambda_after(cfg, n + 1), {}});
                    next.push_back(child_id);
                }
                tree.nodes[static_cast<std::size_t>(id)].children.emplace_back(child_id,
                                                                               t.prob);
            }
        }
        frontier = std::move(next);
    }
    return tree;
}

namespace {

// Shared backward recursion: out(N) = 1/base(mu); interior states combine the
// sojourn term with the jump continuation at rate lambda_next.
std::vector<double> backward_table(const StateTree& tree, const ModelConfig& cfg,
                                   double (*base_rate)(const ModelConfig&, double)) {
    std::vector<double> out(tree.size(), 0.0);
    for (auto it = tree.nodes.rbegin(); it != tree.nodes.rend(); ++it) {
        const StateNode& node = *it;
        const double rate = base_rate(cfg, node.mu) + node.lambda_next;
        double cont = 0.0;
        for (const auto& [cid, p] : node.children)
            cont += p * out[static_cast<std::size_t>(cid)];
        out[static_cast<std::size_t>(node.id)] = (1.0 + node.lambda_next * cont) / rate;
    }
    return out;
}

double discount_plus_mu(const ModelConfig& cfg, double mu) { return cfg.market.rho + mu; }
double mu_only(const ModelConfig&, double mu) { return mu; }

}  // namespace

std::vector<double> annuity_factor_table(const StateTree& tree, const ModelConfig& cfg) {
    return backward_table(tree, cfg, &discount_plus_mu);
}

std::vector<double> life_expectancy_table(const StateTree& tree, const ModelConfig& cfg) {
    return backward_table(tree, cfg, &mu_only);
}

std::vector<double> moneys_worth_table(const StateTree& tree, const ModelConfig& cfg) {
    auto table = annuity_factor_table(tree, cfg);
    const double price_rate = cfg.market.rho_hat + cfg.market.mu_hat;
    for (auto& v : table) v *= price_rate;
    return table;
}

double annuity_factor(const StateTree& tree, int node_id, const ModelConfig& cfg) {
    return annuity_factor_table(tree, cfg).at(static_cast<std::size_t>(node_id));
}

double moneys_worth(const StateTree& tree, int node_id, const ModelConfig& cfg) {
    return moneys_worth_table(tree, cfg).at(static_cast<std::size_t>(node_id));
}

double life_expectancy(const StateTree& tree, int node_id, const ModelConfig& cfg) {
    return life_expectancy_table(tree, cfg).at(static_cast<std::size_t>(node_id));
}

double calibrate(double target_life_expectancy, CalibrationMode mode,
                 const ModelConfig& cfg) {
    if (!(target_life_expectancy > 0.0))
        throw InvalidParamError("calibration target must be > 0");
    if (mode == CalibrationMode::Objective) return 1.0 / target_life_expectancy;

    auto root_le = [&cfg](double mu0) {
        ModelConfig c = cfg;
        c.pdmp.mu0 = mu0;
        const StateTree tree = enumerate_states(c);
        return life_expectancy_table(tree, c).front();
    };
    double lo = 1e-6, hi = 1.0;
    double f_lo = root_le(lo) - target_life_expectancy;
    double f_hi = root_le(hi) - target_life_expectancy;
    if (f_lo * f_hi > 0.0)
        throw NoRootError("calibration bracket [1e-6, 1] does not straddle the target");
    // Life expectancy decreases in mu0, so f_lo >= 0 >= f_hi.
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = root_le(mid) - target_life_expectancy;
        if (std::fabs(f_mid) < 1e-10) return mid;
        if ((f_mid > 0.0) == (f_lo > 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace annuity
