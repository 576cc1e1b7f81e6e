#include "annuity/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "annuity/rng.hpp"

namespace annuity {

namespace {

double min_tree_mu(const StateTree& tree) {
    double m = tree.nodes.front().mu;
    for (const auto& n : tree.nodes) m = std::min(m, n.mu);
    return m;
}

double auto_horizon(const ModelConfig& cfg, const StateTree& tree) {
    const double rate = cfg.market.rho + min_tree_mu(tree);
    return std::log(1e8) / rate;
}

int resolve_threads(const SimConfig& sim) {
    if (sim.n_threads > 0) return sim.n_threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Mortality skeleton: the node path and jump times of one simulated life.
struct Skeleton {
    std::vector<int> nodes;     ///< visited node ids, starting at start_node
    std::vector<double> times;  ///< jump times; times[k] enters nodes[k+1]
};

void sample_skeleton(const StateTree& tree, int start_node, Xoshiro256pp& rng,
                     Skeleton& out) {
    out.nodes.clear();
    out.times.clear();
    out.nodes.push_back(start_node);
    double t = 0.0;
    int id = start_node;
    for (;;) {
        const StateNode& node = tree.nodes[static_cast<std::size_t>(id)];
        if (node.children.empty() || !(node.lambda_next > 0.0)) break;
        t += rng.next_exponential(node.lambda_next);
        double u = rng.next_uniform();
        int next = node.children.back().first;
        for (const auto& [cid, p] : node.children) {
            if (u <= p) {
                next = cid;
                break;
            }
            u -= p;
        }
        out.times.push_back(t);
        out.nodes.push_back(next);
        id = next;
    }
}

/// Exact death time: invert Theta ~ Exp(1) through the piecewise-linear
/// cumulative hazard of the skeleton.
double invert_death_time(const StateTree& tree, const Skeleton& sk, double theta_draw) {
    double lam = 0.0, t = 0.0;
    for (std::size_t k = 0; k < sk.nodes.size(); ++k) {
        const double mu = tree.nodes[static_cast<std::size_t>(sk.nodes[k])].mu;
        const bool last = k + 1 == sk.nodes.size();
        const double t_end = last ? std::numeric_limits<double>::infinity() : sk.times[k];
        const double seg = t_end - t;
        if (last || lam + mu * seg >= theta_draw) return t + (theta_draw - lam) / mu;
        lam += mu * seg;
        t = t_end;
    }
    return t;  // unreachable
}

double reduce_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double reduce_std_error(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / (static_cast<double>(v.size()) - 1.0) /
                     static_cast<double>(v.size()));
}

template <class PerPath>
void parallel_paths(std::size_t count, int threads, const PerPath& body) {
    if (threads <= 1 || count < 128) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk =
        (count + static_cast<std::size_t>(threads) - 1) / static_cast<std::size_t>(threads);
    for (int t = 0; t < threads; ++t) {
        const std::size_t lo = static_cast<std::size_t>(t) * chunk;
        const std::size_t hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

/// Per-(case, node) trigger data in log-wealth space of the unit-spot path.
struct RuleLn {
    RuleKind kind = RuleKind::Never;
    double lo = 0.0;
    double hi = 0.0;
};

bool triggers(const RuleLn& r, double ln_x1) {
    switch (r.kind) {
        case RuleKind::Never: return false;
        case RuleKind::Immediately: return true;
        case RuleKind::StopAbove: return ln_x1 >= r.lo;
        case RuleKind::StopBelow: return ln_x1 <= r.hi;
        case RuleKind::StopInside: return ln_x1 >= r.lo && ln_x1 <= r.hi;
    }
    return false;
}

struct EvalPlan {
    std::vector<RuleLn> rules;  ///< cases * nodes, row-major by case
    std::vector<double> x0;
    std::vector<double> fh;  ///< money's worth per node
    std::size_t n_nodes = 0;
};

EvalPlan build_plan(const ModelConfig& cfg, const StateTree& tree,
                    const std::vector<EvalCase>& cases) {
    EvalPlan plan;
    plan.n_nodes = tree.size();
    plan.fh = moneys_worth_table(tree, cfg);
    plan.rules.resize(cases.size() * plan.n_nodes);
    plan.x0.resize(cases.size());
    for (std::size_t c = 0; c < cases.size(); ++c) {
        if (!(cases[c].x0 > 0.0)) throw InvalidParamError("spot wealth must be > 0");
        if (cases[c].policy.rules.size() != plan.n_nodes)
            throw InvalidParamError("policy must carry one rule per tree node");
        plan.x0[c] = cases[c].x0;
        const double lx0 = std::log(cases[c].x0);
        for (std::size_t nid = 0; nid < plan.n_nodes; ++nid) {
            const StoppingRule& r = cases[c].policy.rules[nid];
            RuleLn ln;
            ln.kind = r.kind;
            if (r.kind == RuleKind::StopAbove)
                ln.lo = std::log(r.b1) - lx0;
            else if (r.kind == RuleKind::StopBelow)
                ln.hi = std::log(r.b1) - lx0;
            else if (r.kind == RuleKind::StopInside) {
                ln.lo = std::log(r.b1) - lx0;
                ln.hi = std::log(r.b2) - lx0;
            }
            plan.rules[c * plan.n_nodes + nid] = ln;
        }
    }
    return plan;
}

struct PathScratch {
    std::vector<char> active;
    std::vector<double> payoff;
};

/// One path of the mortality-integrated estimator for all cases at once. The
/// wealth path is simulated at unit spot; case c reads it scaled by x0_c, so
/// common paths serve every spot and policy variant.
void run_path_integrated(const ModelConfig& cfg, const StateTree& tree,
                         const EvalPlan& plan, const Skeleton& sk, Xoshiro256pp& rng,
                         double z_sign, double dt, double horizon, PathScratch& s) {
    const MarketParams& mp = cfg.market;
    const double drift = mp.theta - mp.alpha - 0.5 * mp.sigma * mp.sigma;
    const std::size_t n_cases = plan.x0.size();

    std::fill(s.active.begin(), s.active.end(), char(1));
    std::size_t n_active = n_cases;

    double ln_x = 0.0, ln_d = 0.0;
    double run_integral = 0.0;  // int_0^t e^{-int (rho+mu)} X^1 ds, trapezoid
    double q_prev = 1.0;        // current D * X^1

    std::size_t seg = 0;
    int node = sk.nodes[0];
    double mu = tree.nodes[static_cast<std::size_t>(node)].mu;
    double coef = mp.alpha + mp.nu * mu;
    double rate = mp.rho + mu;
    double next_jump =
        sk.times.empty() ? std::numeric_limits<double>::infinity() : sk.times[0];

    auto check_triggers = [&]() {
        for (std::size_t c = 0; c < n_cases; ++c) {
            if (!s.active[c]) continue;
            const RuleLn& r =
                plan.rules[c * plan.n_nodes + static_cast<std::size_t>(node)];
            if (triggers(r, ln_x)) {
                const double disc = std::exp(ln_d);
                const double x_stop = plan.x0[c] * std::exp(ln_x);
                s.payoff[c] =
                    plan.x0[c] * run_integral +
                    disc * plan.fh[static_cast<std::size_t>(node)] * (x_stop - mp.K);
                s.active[c] = 0;
                --n_active;
            }
        }
    };

    auto advance = [&](double t_from, double t_to) {
        const double h = t_to - t_from;
        if (h <= 0.0) return;
        ln_x += drift * h + mp.sigma * std::sqrt(h) * (z_sign * next_normal(rng));
        ln_d -= rate * h;
        const double q = std::exp(ln_x + ln_d);
        run_integral += 0.5 * (q_prev + q) * coef * h;
        q_prev = q;
    };

    check_triggers();
    if (n_active == 0) return;

    double t = 0.0;
    const long steps = static_cast<long>(std::ceil(horizon / dt - 1e-12));
    for (long k = 1; k <= steps && n_active > 0; ++k) {
        const double t_next = std::min(static_cast<double>(k) * dt, horizon);
        while (next_jump <= t_next) {
            advance(t, next_jump);
            t = next_jump;
            ++seg;
            node = sk.nodes[seg];
            mu = tree.nodes[static_cast<std::size_t>(node)].mu;
            coef = mp.alpha + mp.nu * mu;
            rate = mp.rho + mu;
            next_jump = seg < sk.times.size() ? sk.times[seg]
                                              : std::numeric_limits<double>::infinity();
        }
        advance(t, t_next);
        t = t_next;
        check_triggers();
    }
    // cases never triggered by the horizon keep the running term only
    for (std::size_t c = 0; c < n_cases; ++c)
        if (s.active[c]) s.payoff[c] = plan.x0[c] * run_integral;
}

/// One path of the raw Cox estimator (explicit death time, rho discounting).
void run_path_cox(const ModelConfig& cfg, const StateTree& tree, const EvalPlan& plan,
                  const Skeleton& sk, double death_time, Xoshiro256pp& rng, double z_sign,
                  double dt, double horizon, PathScratch& s) {
    (void)tree;
    const MarketParams& mp = cfg.market;
    const double drift = mp.theta - mp.alpha - 0.5 * mp.sigma * mp.sigma;
    const double price_rate = mp.rho_hat + mp.mu_hat;
    const std::size_t n_cases = plan.x0.size();

    std::fill(s.active.begin(), s.active.end(), char(1));
    std::size_t n_active = n_cases;

    double ln_x = 0.0;
    double run_integral = 0.0;  // int_0^t e^{-rho s} X^1 ds
    double q_prev = 1.0;

    std::size_t seg = 0;
    int node = sk.nodes[0];
    double next_jump =
        sk.times.empty() ? std::numeric_limits<double>::infinity() : sk.times[0];

    auto annuity_leg = [&](double tau) {
        if (death_time <= tau) return 0.0;
        return (std::exp(-mp.rho * tau) - std::exp(-mp.rho * death_time)) / mp.rho;
    };

    auto check_triggers = [&](double t_now) {
        for (std::size_t c = 0; c < n_cases; ++c) {
            if (!s.active[c]) continue;
            const RuleLn& r =
                plan.rules[c * plan.n_nodes + static_cast<std::size_t>(node)];
            if (triggers(r, ln_x)) {
                const double x_stop = plan.x0[c] * std::exp(ln_x);
                const double payment = (x_stop - mp.K) * price_rate;
                s.payoff[c] = plan.x0[c] * mp.alpha * run_integral +
                              payment * annuity_leg(t_now);
                s.active[c] = 0;
                --n_active;
            }
        }
    };

    auto advance = [&](double t_from, double t_to) {
        const double h = t_to - t_from;
        if (h <= 0.0) return;
        ln_x += drift * h + mp.sigma * std::sqrt(h) * (z_sign * next_normal(rng));
        const double q = std::exp(ln_x - mp.rho * t_to);
        run_integral += 0.5 * (q_prev + q) * h;
        q_prev = q;
    };

    check_triggers(0.0);
    if (n_active == 0) return;

    const double t_end = std::min(death_time, horizon);
    double t = 0.0;
    const long steps = static_cast<long>(std::ceil(t_end / dt - 1e-12));
    for (long k = 1; k <= steps && n_active > 0; ++k) {
        const double t_next = std::min(static_cast<double>(k) * dt, t_end);
        while (next_jump <= t_next) {
            advance(t, next_jump);
            t = next_jump;
            ++seg;
            node = sk.nodes[seg];
            next_jump = seg < sk.times.size() ? sk.times[seg]
                                              : std::numeric_limits<double>::infinity();
        }
        advance(t, t_next);
        t = t_next;
        if (t < death_time) check_triggers(t);
    }
    if (n_active > 0 && death_time <= horizon) {
        // death before stopping: close the running term at tau_d, pay bequest
        advance(t, death_time);
        const double bequest_factor = std::exp(-mp.rho * death_time) * mp.nu;
        for (std::size_t c = 0; c < n_cases; ++c) {
            if (!s.active[c]) continue;
            const double x_death = plan.x0[c] * std::exp(ln_x);
            s.payoff[c] =
                plan.x0[c] * mp.alpha * run_integral + bequest_factor * x_death;
            s.active[c] = 0;
        }
    } else {
        for (std::size_t c = 0; c < n_cases; ++c)
            if (s.active[c]) s.payoff[c] = plan.x0[c] * mp.alpha * run_integral;
    }
}

struct BatchResult {
    std::vector<std::vector<double>> per_sample;  ///< [case][pair or path]
    std::size_t reported_paths = 0;
};

BatchResult run_batch(const ModelConfig& cfg, const StateTree& tree, const SimConfig& sim,
                      int start_node, const std::vector<EvalCase>& cases,
                      PayoffEstimator estimator) {
    const EvalPlan plan = build_plan(cfg, tree, cases);
    const double horizon = sim.horizon > 0.0 ? sim.horizon : auto_horizon(cfg, tree);
    const std::size_t n_cases = cases.size();

    const bool anti = sim.antithetic;
    const std::size_t n_units =
        anti ? std::max<std::size_t>(1, sim.n_paths / 2)
             : std::max<std::size_t>(1, sim.n_paths);

    BatchResult out;
    out.reported_paths = anti ? 2 * n_units : n_units;
    out.per_sample.assign(n_cases, std::vector<double>(n_units, 0.0));

    parallel_paths(n_units, resolve_threads(sim), [&](std::size_t unit) {
        PathScratch scratch;
        scratch.active.resize(n_cases);
        scratch.payoff.assign(n_cases, 0.0);

        Xoshiro256pp rng_jump = Xoshiro256pp::substream(sim.seed, 2 * unit);
        Skeleton sk;
        sample_skeleton(tree, start_node, rng_jump, sk);
        const double theta_draw = rng_jump.next_exponential(1.0);
        const double death_time = estimator == PayoffEstimator::RawCox
                                      ? invert_death_time(tree, sk, theta_draw)
                                      : 0.0;

        const int reps = anti ? 2 : 1;
        for (int repl = 0; repl < reps; ++repl) {
            Xoshiro256pp rng_brw = Xoshiro256pp::substream(sim.seed, 2 * unit + 1);
            const double z_sign = repl == 0 ? 1.0 : -1.0;
            if (estimator == PayoffEstimator::MortalityIntegrated)
                run_path_integrated(cfg, tree, plan, sk, rng_brw, z_sign, sim.dt,
                                    horizon, scratch);
            else
                run_path_cox(cfg, tree, plan, sk, death_time, rng_brw, z_sign, sim.dt,
                             horizon, scratch);
            for (std::size_t c = 0; c < n_cases; ++c)
                out.per_sample[c][unit] +=
                    anti ? 0.5 * scratch.payoff[c] : scratch.payoff[c];
        }
    });
    return out;
}

}  // namespace

Policy policy_from_solution(const Solution& sol) {
    Policy p;
    p.rules.resize(sol.stages.size());
    for (std::size_t i = 0; i < sol.stages.size(); ++i) {
        const StageValue& sv = sol.stages[i];
        StoppingRule r;
        switch (sv.regime) {
            case Regime::Case1NeverStop:
            case Regime::K0NeverStop:
                r.kind = RuleKind::Never;
                break;
            case Regime::Case2StopAbove:
                r.kind = RuleKind::StopAbove;
                r.b1 = sv.thresholds.at(0);
                break;
            case Regime::Case3StopInterval:
                r.kind = RuleKind::StopInside;
                r.b1 = sv.thresholds.at(0);
                r.b2 = sv.thresholds.at(1);
                break;
            case Regime::Case4StopBelow:
                r.kind = RuleKind::StopBelow;
                r.b1 = sv.thresholds.at(0);
                break;
            case Regime::Case5StopEverywhere:
            case Regime::K0StopEverywhere:
                r.kind = RuleKind::Immediately;
                break;
        }
        p.rules[i] = r;
    }
    return p;
}

std::vector<PolicyEvalResult> evaluate_policies(const ModelConfig& cfg,
                                                const StateTree& tree,
                                                const SimConfig& sim, int start_node,
                                                const std::vector<EvalCase>& cases,
                                                PayoffEstimator estimator) {
    BatchResult batch = run_batch(cfg, tree, sim, start_node, cases, estimator);
    std::vector<PolicyEvalResult> out(cases.size());
    for (std::size_t c = 0; c < cases.size(); ++c) {
        const double mean = reduce_mean(batch.per_sample[c]);
        out[c].mean = mean;
        out[c].std_error = reduce_std_error(batch.per_sample[c], mean);
        out[c].n_paths = batch.reported_paths;
    }
    return out;
}

PolicyEvalResult evaluate_policy(const ModelConfig& cfg, const StateTree& tree,
                                 const SimConfig& sim, int start_node, double x0,
                                 const Policy& policy, PayoffEstimator estimator) {
    return evaluate_policies(cfg, tree, sim, start_node, {{x0, policy}}, estimator)
        .front();
}

MomentEstimate estimate_life_expectancy(const ModelConfig& cfg, const StateTree& tree,
                                        const SimConfig& sim, int start_node) {
    (void)cfg;
    const std::size_t n = std::max<std::size_t>(1, sim.n_paths);
    std::vector<double> draws(n);
    parallel_paths(n, resolve_threads(sim), [&](std::size_t i) {
        Xoshiro256pp rng = Xoshiro256pp::substream(sim.seed, 2 * i);
        Skeleton sk;
        sample_skeleton(tree, start_node, rng, sk);
        draws[i] = invert_death_time(tree, sk, rng.next_exponential(1.0));
    });
    MomentEstimate est;
    est.mean = reduce_mean(draws);
    est.std_error = reduce_std_error(draws, est.mean);
    return est;
}

MomentEstimate estimate_annuity_factor(const ModelConfig& cfg, const StateTree& tree,
                                       const SimConfig& sim, int start_node) {
    const double rho = cfg.market.rho;
    const std::size_t n = std::max<std::size_t>(1, sim.n_paths);
    std::vector<double> draws(n);
    parallel_paths(n, resolve_threads(sim), [&](std::size_t i) {
        Xoshiro256pp rng = Xoshiro256pp::substream(sim.seed, 2 * i);
        Skeleton sk;
        sample_skeleton(tree, start_node, rng, sk);
        // int_0^inf e^{-rho u - Lambda_u} du, exactly over the segments
        double acc = 0.0, lam = 0.0, t = 0.0;
        for (std::size_t k = 0; k < sk.nodes.size(); ++k) {
            const double mu = tree.nodes[static_cast<std::size_t>(sk.nodes[k])].mu;
            const double front = std::exp(-rho * t - lam);
            if (k + 1 == sk.nodes.size()) {
                acc += front / (rho + mu);
                break;
            }
            const double seg = sk.times[k] - t;
            acc += front * (1.0 - std::exp(-(rho + mu) * seg)) / (rho + mu);
            lam += mu * seg;
            t = sk.times[k];
        }
        draws[i] = acc;
    });
    MomentEstimate est;
    est.mean = reduce_mean(draws);
    est.std_error = reduce_std_error(draws, est.mean);
    return est;
}

SimulatedPath simulate_path(const ModelConfig& cfg, const StateTree& tree,
                            const SimConfig& sim, double x0, std::uint64_t path_index,
                            int start_node) {
    if (!(x0 > 0.0)) throw InvalidParamError("spot wealth must be > 0");
    const MarketParams& mp = cfg.market;
    const double horizon = sim.horizon > 0.0 ? sim.horizon : auto_horizon(cfg, tree);
    Xoshiro256pp rng_jump = Xoshiro256pp::substream(sim.seed, 2 * path_index);
    Skeleton sk;
    sample_skeleton(tree, start_node, rng_jump, sk);
    const double theta_draw = rng_jump.next_exponential(1.0);

    SimulatedPath out;
    out.death_time = invert_death_time(tree, sk, theta_draw);

    Xoshiro256pp rng_brw = Xoshiro256pp::substream(sim.seed, 2 * path_index + 1);
    const double drift = mp.theta - mp.alpha - 0.5 * mp.sigma * mp.sigma;

    double t = 0.0, ln_x = std::log(x0);
    std::size_t seg = 0;
    double next_jump =
        sk.times.empty() ? std::numeric_limits<double>::infinity() : sk.times[0];
    out.times.push_back(0.0);
    out.wealth.push_back(x0);
    out.node_ids.push_back(sk.nodes[0]);

    const long steps = static_cast<long>(std::ceil(horizon / sim.dt - 1e-12));
    for (long k = 1; k <= steps; ++k) {
        const double t_next = std::min(static_cast<double>(k) * sim.dt, horizon);
        while (next_jump <= t_next) {
            const double h = next_jump - t;
            if (h > 0.0)
                ln_x += drift * h + mp.sigma * std::sqrt(h) * next_normal(rng_brw);
            t = next_jump;
            ++seg;
            next_jump = seg < sk.times.size() ? sk.times[seg]
                                              : std::numeric_limits<double>::infinity();
            out.times.push_back(t);
            out.wealth.push_back(std::exp(ln_x));
            out.node_ids.push_back(sk.nodes[seg]);
        }
        const double h = t_next - t;
        if (h > 0.0) ln_x += drift * h + mp.sigma * std::sqrt(h) * next_normal(rng_brw);
        t = t_next;
        out.times.push_back(t);
        out.wealth.push_back(std::exp(ln_x));
        out.node_ids.push_back(sk.nodes[seg]);
    }
    return out;
}

namespace {

void append_threshold_variants(std::vector<EvalCase>& cases,
                               std::vector<std::string>& labels, const Policy& base,
                               double x0, double perturbation, std::size_t node_id) {
    const StoppingRule& r = base.rules[node_id];
    auto add = [&](const std::string& label, const StoppingRule& variant) {
        EvalCase ec{x0, base};
        ec.policy.rules[node_id] = variant;
        cases.push_back(std::move(ec));
        labels.push_back(label);
    };
    const std::string tag = "node" + std::to_string(node_id);
    switch (r.kind) {
        case RuleKind::StopAbove:
        case RuleKind::StopBelow: {
            for (double sgn : {+1.0, -1.0}) {
                StoppingRule v = r;
                v.b1 = r.b1 * (1.0 + sgn * perturbation);
                add(tag + (sgn > 0 ? " b*(1+p)" : " b*(1-p)"), v);
            }
            break;
        }
        case RuleKind::StopInside: {
            for (double sgn : {+1.0, -1.0}) {
                StoppingRule v = r;
                v.b1 = std::min(r.b1 * (1.0 + sgn * perturbation), r.b2);
                add(tag + (sgn > 0 ? " b1*(1+p)" : " b1*(1-p)"), v);
            }
            for (double sgn : {+1.0, -1.0}) {
                StoppingRule v = r;
                v.b2 = std::max(r.b2 * (1.0 + sgn * perturbation), r.b1);
                add(tag + (sgn > 0 ? " b2*(1+p)" : " b2*(1-p)"), v);
            }
            break;
        }
        case RuleKind::Immediately: {
            // delayed exercise anchored at the spot
            add(tag + " delay-until-drop",
                StoppingRule{RuleKind::StopBelow, x0 * (1.0 - perturbation), 0.0});
            add(tag + " delay-until-gain",
                StoppingRule{RuleKind::StopAbove, x0 * (1.0 + perturbation), 0.0});
            break;
        }
        case RuleKind::Never: {
            add(tag + " stop-on-gain",
                StoppingRule{RuleKind::StopAbove, x0 * (1.0 + perturbation), 0.0});
            add(tag + " stop-on-drop",
                StoppingRule{RuleKind::StopBelow, x0 * (1.0 - perturbation), 0.0});
            break;
        }
    }
}

}  // namespace

ProbeReport optimality_probe(const ModelConfig& cfg, const StateTree& tree,
                             const SimConfig& sim, const Policy& base, double x0,
                             double perturbation, int start_node) {
    std::vector<EvalCase> cases{{x0, base}};
    std::vector<std::string> labels{"base"};
    for (std::size_t nid = 0; nid < base.rules.size(); ++nid)
        append_threshold_variants(cases, labels, base, x0, perturbation, nid);

    BatchResult batch =
        run_batch(cfg, tree, sim, start_node, cases, PayoffEstimator::MortalityIntegrated);

    ProbeReport report;
    const auto& base_samples = batch.per_sample[0];
    report.base.mean = reduce_mean(base_samples);
    report.base.std_error = reduce_std_error(base_samples, report.base.mean);
    report.base.n_paths = batch.reported_paths;

    std::vector<double> diff(base_samples.size());
    for (std::size_t c = 1; c < cases.size(); ++c) {
        const auto& samples = batch.per_sample[c];
        ProbeEntry e;
        e.label = labels[c];
        e.mean = reduce_mean(samples);
        e.std_error = reduce_std_error(samples, e.mean);
        for (std::size_t i = 0; i < samples.size(); ++i)
            diff[i] = samples[i] - base_samples[i];
        e.diff = reduce_mean(diff);
        e.diff_std_error = reduce_std_error(diff, e.diff);
        e.beats_base = e.diff > 2.0 * e.diff_std_error;
        if (e.beats_base) report.pass = false;
        report.entries.push_back(std::move(e));
    }
    return report;
}

ProbeReport optimality_probe(const ModelConfig& cfg, const SimConfig& sim,
                             const Solution& sol, double x0, double perturbation) {
    return optimality_probe(cfg, sol.tree, sim, policy_from_solution(sol), x0,
                            perturbation, 0);
}

}  // namespace annuity
