#include "annuity/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace annuity {

namespace {

constexpr double kMuMatchRel = 1e-9;
constexpr double kProbSumTol = 1e-12;

bool mu_match(double a, double b) {
    return std::fabs(a - b) <= kMuMatchRel * std::max({1.0, std::fabs(a), std::fabs(b)});
}

void push_unique(std::vector<double>& mus, double mu) {
    for (double m : mus)
        if (mu_match(m, mu)) return;
    mus.push_back(mu);
}

}  // namespace

const std::vector<KernelTarget>& kernel_lookup(const ModelConfig& cfg, int n, double mu) {
    for (const auto& e : cfg.pdmp.kernel)
        if (e.from_stage == n && mu_match(e.from_mu, mu)) return e.targets;
    std::ostringstream os;
    os << "no kernel entry for state (n=" << n << ", mu=" << mu << ")";
    throw InvalidDistributionError(os.str());
}

std::vector<std::vector<double>> reachable_mus(const ModelConfig& cfg) {
    std::vector<std::vector<double>> stages(static_cast<std::size_t>(cfg.pdmp.N) + 1);
    stages[0].push_back(cfg.pdmp.mu0);
    for (int n = 0; n < cfg.pdmp.N; ++n) {
        for (double mu : stages[static_cast<std::size_t>(n)]) {
            const auto& targets = kernel_lookup(cfg, n, mu);
            for (const auto& t : targets)
                push_unique(stages[static_cast<std::size_t>(n) + 1], t.mu);
        }
    }
    return stages;
}

ModelConfig validate_config(ModelConfig cfg) {
    const MarketParams& m = cfg.market;
    if (!(m.sigma > 0.0)) throw InvalidParamError("sigma must be > 0");
    if (!(m.rho > 0.0)) throw InvalidParamError("rho must be > 0");
    if (!(m.rho_hat > 0.0)) throw InvalidParamError("rho_hat must be > 0");
    if (!(m.mu_hat > 0.0)) throw InvalidParamError("mu_hat must be > 0");
    if (!(m.alpha >= 0.0)) throw InvalidParamError("alpha must be >= 0");
    if (!(m.nu >= 0.0 && m.nu <= 1.0)) throw InvalidParamError("nu must be in [0, 1]");
    if (!std::isfinite(m.theta) || !std::isfinite(m.K))
        throw InvalidParamError("theta and K must be finite");

    const PdmpSpec& p = cfg.pdmp;
    if (p.N < 0) throw InvalidParamError("N must be a nonnegative integer");
    if (static_cast<int>(p.lambdas.size()) != p.N)
        throw InvalidParamError("lambdas must have exactly N entries");
    for (double l : p.lambdas)
        if (!(l >= 0.0) || !std::isfinite(l))
            throw InvalidParamError("jump intensities must be finite and >= 0");
    if (!(p.mu0 > 0.0)) throw InvalidParamError("mu0 must be > 0");

    for (const auto& e : p.kernel) {
        if (e.from_stage < 0 || e.from_stage >= p.N)
            throw InvalidParamError("kernel from_stage must be in [0, N)");
        if (e.targets.empty())
            throw InvalidDistributionError("kernel distribution has no targets");
        double sum = 0.0;
        for (const auto& t : e.targets) {
            if (!(t.prob > 0.0))
                throw InvalidDistributionError("kernel probabilities must be > 0");
            if (!(t.mu > 0.0) || !std::isfinite(t.mu))
                throw InvalidDistributionError("kernel mortality targets must be > 0");
            sum += t.prob;
        }
        if (std::fabs(sum - 1.0) > kProbSumTol) {
            std::ostringstream os;
            os << "kernel probabilities sum to " << sum << " (expected 1)";
            throw InvalidDistributionError(os.str());
        }
    }

    // Reachability walk; also verifies kernel coverage of every visited state.
    const auto stages = reachable_mus(cfg);
    double mu_min = p.mu0, mu_max = p.mu0;
    for (const auto& stage : stages)
        for (double mu : stage) {
            mu_min = std::min(mu_min, mu);
            mu_max = std::max(mu_max, mu);
        }
    cfg.pdmp.mu_min = mu_min;
    cfg.pdmp.mu_max = mu_max;

    const double drift_gap = m.theta - m.alpha - m.rho - mu_min;
    if (drift_gap >= 0.0) {
        std::ostringstream os;
        os << "ill-posed: theta - alpha - rho - mu_min = " << drift_gap
           << " >= 0, the value function is infinite";
        throw IllPosedError(os.str());
    }
    return cfg;
}

double lambda_after(const ModelConfig& cfg, int n) {
    if (n < 0 || n > cfg.pdmp.N) throw InvalidParamError("stage out of range");
    if (n >= cfg.pdmp.N) return 0.0;
    return cfg.pdmp.lambdas[static_cast<std::size_t>(n)];
}

double effective_rate(const ModelConfig& cfg, int n, double mu) {
    if (!(mu > 0.0)) throw InvalidParamError("mu must be > 0");
    return cfg.market.rho + mu + lambda_after(cfg, n);
}

double beta(const ModelConfig& cfg, int n, double mu) {
    const double r = effective_rate(cfg, n, mu);
    const double denom = r + cfg.market.alpha - cfg.market.theta;
    return (cfg.market.alpha + cfg.market.nu * mu) / denom;
}

}  // namespace annuity
