#include "annuity/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace annuity {

bool VerifyReport::all_pass() const {
    for (const auto& r : records)
        if (!r.pass) return false;
    return true;
}

std::string VerifyReport::to_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : records) {
        out.push_back({{"check", r.check},
                       {"node_id", r.node_id},
                       {"max_violation", r.max_violation},
                       {"tolerance", r.tolerance},
                       {"pass", r.pass}});
    }
    return out.dump(2);
}

std::string VerifyReport::to_table() const {
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof(line), "%-28s %6s %14s %12s %6s\n", "check", "node",
                  "max_violation", "tolerance", "pass");
    os << line;
    for (const auto& r : records) {
        std::snprintf(line, sizeof(line), "%-28s %6d %14.4e %12.2e %6s\n",
                      r.check.c_str(), r.node_id, r.max_violation, r.tolerance,
                      r.pass ? "PASS" : "FAIL");
        os << line;
    }
    return os.str();
}

namespace {

/// continuation-region mask derived from the regime tag and thresholds
std::vector<char> continuation_mask(const StageValue& sv) {
    const std::size_t n = sv.grid.size();
    std::vector<char> cont(n, 0);
    auto b = [&](std::size_t k) { return sv.thresholds.at(k); };
    for (std::size_t i = 0; i < n; ++i) {
        const double x = sv.grid[i];
        switch (sv.regime) {
            case Regime::Case1NeverStop:
            case Regime::K0NeverStop: cont[i] = 1; break;
            case Regime::Case2StopAbove: cont[i] = x < b(0); break;
            case Regime::Case3StopInterval: cont[i] = x < b(0) || x > b(1); break;
            case Regime::Case4StopBelow: cont[i] = x > b(0); break;
            case Regime::Case5StopEverywhere:
            case Regime::K0StopEverywhere: cont[i] = 0; break;
        }
    }
    return cont;
}

/// indices within `dist` grid cells of any threshold
std::vector<char> near_threshold_mask(const StageValue& sv, int dist) {
    const std::size_t n = sv.grid.size();
    std::vector<char> near(n, 0);
    for (double b : sv.thresholds) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t lo = i >= static_cast<std::size_t>(dist)
                                       ? i - static_cast<std::size_t>(dist)
                                       : 0;
            const std::size_t hi = std::min(n - 1, i + static_cast<std::size_t>(dist));
            if (sv.grid[lo] <= b && b <= sv.grid[hi]) near[i] = 1;
        }
    }
    return near;
}

double value_scale(const StageValue& sv) {
    double m = 1.0;
    for (double v : sv.values) m = std::max(m, std::fabs(v));
    return m;
}

CheckRecord check_obstacle(const StageValue& sv) {
    double worst = 0.0;
    for (double w : sv.obstacle_gap) worst = std::max(worst, -w);
    return {"obstacle_domination", sv.node_id, worst / value_scale(sv), 1e-8,
            worst / value_scale(sv) <= 1e-8};
}

CheckRecord check_smooth_fit(const StageValue& sv) {
    CheckRecord rec{"smooth_fit", sv.node_id, 0.0, 1e-4, true};
    const auto& x = sv.grid;
    const auto& v = sv.values;
    const std::size_t n = x.size();
    const double h = std::log(x[1] / x[0]);  // uniform in log space

    auto continuation_slope_at = [&](double b, bool from_left) {
        // derivative at b of the quadratic through the three nearest
        // continuation-side points, in log coordinates
        const auto it = std::lower_bound(x.begin(), x.end(), b);
        std::size_t i = static_cast<std::size_t>(it - x.begin());
        std::size_t j0;
        if (from_left) {
            if (i < 3) return sv.f_hat;  // too close to the edge, skip
            j0 = i - 3;
        } else {
            if (x[i] < b) ++i;
            if (i + 2 >= n) return sv.f_hat;
            j0 = i;
        }
        const double ub = std::log(b);
        const double u0 = std::log(x[j0]), u1 = std::log(x[j0 + 1]),
                     u2 = std::log(x[j0 + 2]);
        const double f0 = v[j0], f1 = v[j0 + 1], f2 = v[j0 + 2];
        // derivative of the Lagrange quadratic at ub
        const double d0 = f0 * (2 * ub - u1 - u2) / ((u0 - u1) * (u0 - u2));
        const double d1 = f1 * (2 * ub - u0 - u2) / ((u1 - u0) * (u1 - u2));
        const double d2 = f2 * (2 * ub - u0 - u1) / ((u2 - u0) * (u2 - u1));
        return (d0 + d1 + d2) / b;  // V_x = V_u / x
    };
    (void)h;

    for (std::size_t k = 0; k < sv.thresholds.size(); ++k) {
        const double b = sv.thresholds[k];
        bool from_left = true;
        if (sv.regime == Regime::Case4StopBelow) from_left = false;
        if (sv.regime == Regime::Case3StopInterval && k == 1) from_left = false;
        const double slope = continuation_slope_at(b, from_left);
        const double rel = std::fabs(slope - sv.f_hat) / std::fabs(sv.f_hat);
        rec.max_violation = std::max(rec.max_violation, rel);
    }
    rec.pass = rec.max_violation <= rec.tolerance;
    return rec;
}

CheckRecord check_ode_residual(const ModelConfig& cfg, const StateTree& tree,
                               const StageValue& sv, const RunningReward& M) {
    CheckRecord rec{"ode_residual", sv.node_id, 0.0, 1e-3, true};
    const MarketParams& mp = cfg.market;
    const StateNode& node = tree.nodes[static_cast<std::size_t>(sv.node_id)];
    const auto cont = continuation_mask(sv);
    const auto near = near_threshold_mask(sv, 2);
    const auto& x = sv.grid;
    const auto& v = sv.values;
    const std::size_t n = x.size();
    const double h = std::log(x[1] / x[0]);
    const double s2 = mp.sigma * mp.sigma;
    const double coef = mp.alpha + mp.nu * node.mu;

    for (std::size_t i = 2; i + 2 < n; ++i) {
        if (!cont[i] || near[i]) continue;
        // the stencil must stay inside the continuation region
        if (!cont[i - 2] || !cont[i - 1] || !cont[i + 1] || !cont[i + 2]) continue;
        const double vu =
            (-v[i + 2] + 8 * v[i + 1] - 8 * v[i - 1] + v[i - 2]) / (12 * h);
        const double vuu = (-v[i + 2] + 16 * v[i + 1] - 30 * v[i] + 16 * v[i - 1] -
                            v[i - 2]) /
                           (12 * h * h);
        const double vhat =
            sv.lambda > 0.0 && M.child_mix ? M.child_mix(x[i]) : 0.0;
        const double gen = 0.5 * s2 * (vuu - vu) + (mp.theta - mp.alpha) * vu;
        const double res = gen - sv.rate * v[i] + coef * x[i] + sv.lambda * vhat;
        const double scale =
            std::max({std::fabs(sv.rate * v[i]), std::fabs(coef * x[i]),
                      std::fabs(sv.lambda * vhat), std::fabs(0.5 * s2 * vuu),
                      std::fabs(gen), 1e-12});
        rec.max_violation = std::max(rec.max_violation, std::fabs(res) / scale);
    }
    rec.pass = rec.max_violation <= rec.tolerance;
    return rec;
}

CheckRecord check_shape(const StageValue& sv) {
    CheckRecord rec{"convexity_monotonicity", sv.node_id, 0.0, 1e-9, true};
    const auto& x = sv.grid;
    const auto& v = sv.values;
    std::vector<double> slope(x.size() - 1);
    double slope_scale = 1.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        slope[i] = (v[i + 1] - v[i]) / (x[i + 1] - x[i]);
        slope_scale = std::max(slope_scale, std::fabs(slope[i]));
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < slope.size(); ++i) {
        worst = std::max(worst, -slope[i] / slope_scale);  // monotone
        if (i > 0) worst = std::max(worst, (slope[i - 1] - slope[i]) / slope_scale);
    }
    rec.max_violation = worst;
    rec.pass = worst <= rec.tolerance;
    return rec;
}

CheckRecord check_asymptote(const StageValue& sv) {
    const double ratio = sv.values.back() / sv.grid.back();
    const double rel = std::fabs(ratio - sv.asymptotic_slope) /
                       std::max(1e-12, std::fabs(sv.asymptotic_slope));
    return {"asymptotic_slope", sv.node_id, rel, 1e-2, rel <= 1e-2};
}

CheckRecord check_moneys_worth(const ModelConfig& cfg, const StateTree& tree,
                               const std::vector<double>& fh, int node_id) {
    const StateNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
    const double r = effective_rate(cfg, node.n, node.mu);
    double mixed = 0.0;
    for (const auto& [cid, p] : node.children)
        mixed += p * fh[static_cast<std::size_t>(cid)];
    const double margin = r * fh[static_cast<std::size_t>(node_id)] -
                          node.lambda_next * mixed;
    // strict inequality: any nonpositive margin is a violation
    return {"moneys_worth_inequality", node_id, -margin, 0.0, margin > 0.0};
}

CheckRecord check_growth(const StageValue& sv, double bound) {
    double worst = 0.0;
    for (std::size_t i = 0; i < sv.grid.size(); ++i) {
        const double cap = bound * (1.0 + sv.grid[i]);
        worst = std::max(worst, (sv.values[i] - cap) / cap);
    }
    return {"linear_growth_bound", sv.node_id, worst, 1e-12, worst <= 1e-12};
}

CheckRecord check_mc_agreement(const ModelConfig& cfg, const Solution& sol,
                               const SimConfig& sim, const StageValue& sv) {
    CheckRecord rec{"mc_policy_agreement", sv.node_id, 0.0, 1.0, true};
    const Policy policy = policy_from_solution(sol);

    std::vector<double> spots;
    if (!sv.thresholds.empty()) {
        const double b = sv.thresholds.front();
        spots = {0.3 * b, 0.6 * b, 0.9 * b, 1.2 * b, 2.0 * b};
    } else {
        const double llo = std::log(sv.grid.front()), lhi = std::log(sv.grid.back());
        for (double q : {0.30, 0.42, 0.55, 0.68, 0.80})
            spots.push_back(std::exp(llo + q * (lhi - llo)));
    }
    const double lo = 2.0 * sv.grid.front(), hi = 0.5 * sv.grid.back();
    std::vector<EvalCase> cases;
    for (double& s : spots) {
        s = std::clamp(s, lo, hi);
        cases.push_back({s, policy});
    }
    const auto results =
        evaluate_policies(cfg, sol.tree, sim, sv.node_id, cases);
    for (std::size_t i = 0; i < spots.size(); ++i) {
        const double ref = value_at(sol, sv.node_id, spots[i]);
        const double band = 2.0 * results[i].std_error +
                            1e-9 * std::max(1.0, std::fabs(ref));
        const double ratio = std::fabs(results[i].mean - ref) / band;
        rec.max_violation = std::max(rec.max_violation, ratio);
    }
    rec.pass = rec.max_violation <= rec.tolerance;
    return rec;
}

CheckRecord check_regime_pattern(const StageValue& sv) {
    CheckRecord rec{"regime_sign_pattern", sv.node_id, 0.0, 1e-8, true};
    const auto cont = continuation_mask(sv);
    const auto near = near_threshold_mask(sv, 3);
    const double scale = value_scale(sv);
    double worst = 0.0;
    for (std::size_t i = 0; i < sv.grid.size(); ++i) {
        const double w = sv.obstacle_gap[i];
        if (!cont[i]) {
            worst = std::max(worst, std::fabs(w) / scale);  // stopped: W == 0
        } else if (!near[i] && w <= 1e-8 * scale) {
            // interior continuation must be strictly positive
            worst = std::max(worst, (1e-8 * scale - w) / scale + 1e-8);
        }
    }
    rec.max_violation = worst;
    rec.pass = worst <= rec.tolerance;
    return rec;
}

CheckRecord check_m_zero_sign(const ModelConfig& cfg, const StageValue& sv,
                              const RunningReward& M) {
    CheckRecord rec{"m_at_zero_sign", sv.node_id, 0.0, 0.5, true};
    const double K = cfg.market.K;
    if (K == 0.0) return rec;  // vacuous
    const double m0 = M.intercept + M.lambda * M.mix_at_zero;
    const bool ok = K > 0.0 ? m0 > 0.0 : m0 < 0.0;
    rec.max_violation = ok ? 0.0 : 1.0;
    rec.pass = ok;
    return rec;
}

}  // namespace

VerifyReport run_suite(const ModelConfig& cfg, const Solution& sol,
                       const SimConfig& sim) {
    VerifyReport report;
    const auto fh = moneys_worth_table(sol.tree, cfg);
    const auto growth = growth_bound_table(sol.tree, cfg);

    for (const auto& sv : sol.stages) {
        const RunningReward M =
            assemble_M(sol.tree, sv.node_id, sol.stages, cfg, true);
        report.records.push_back(check_obstacle(sv));
        report.records.push_back(check_smooth_fit(sv));
        report.records.push_back(check_ode_residual(cfg, sol.tree, sv, M));
        report.records.push_back(check_shape(sv));
        report.records.push_back(check_asymptote(sv));
        report.records.push_back(check_moneys_worth(cfg, sol.tree, fh, sv.node_id));
        report.records.push_back(
            check_growth(sv, growth[static_cast<std::size_t>(sv.node_id)]));
        report.records.push_back(check_mc_agreement(cfg, sol, sim, sv));
        report.records.push_back(check_regime_pattern(sv));
        report.records.push_back(check_m_zero_sign(cfg, sv, M));
    }
    return report;
}

}  // namespace annuity
