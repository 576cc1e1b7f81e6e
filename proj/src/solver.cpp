#include "annuity/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "annuity/interp.hpp"

namespace annuity {

WealthGrid WealthGrid::make(double lo, double hi, int count) {
    if (count < 64) throw InvalidParamError("wealth grid needs at least 64 points");
    WealthGrid g;
    g.points = log_spaced(lo, hi, count);
    return g;
}

WealthGrid WealthGrid::make_default(double K, int count) {
    const double scale = std::max(std::fabs(K), 1.0);
    return make(1e-2 * scale, 1e3 * scale, count);
}

const char* regime_name(Regime r) {
    switch (r) {
        case Regime::Case1NeverStop: return "case1_never_stop";
        case Regime::Case2StopAbove: return "case2_stop_above";
        case Regime::Case3StopInterval: return "case3_stop_interval";
        case Regime::Case4StopBelow: return "case4_stop_below";
        case Regime::Case5StopEverywhere: return "case5_stop_everywhere";
        case Regime::K0NeverStop: return "k0_never_stop";
        case Regime::K0StopEverywhere: return "k0_stop_everywhere";
    }
    return "unknown";
}

std::vector<double> asymptotic_slope_table(const StateTree& tree, const ModelConfig& cfg) {
    const auto fh = moneys_worth_table(tree, cfg);
    const MarketParams& m = cfg.market;
    std::vector<double> out(tree.size(), 0.0);
    for (auto it = tree.nodes.rbegin(); it != tree.nodes.rend(); ++it) {
        const StateNode& node = *it;
        const double r = effective_rate(cfg, node.n, node.mu);
        double vhat = 0.0;
        for (const auto& [cid, p] : node.children)
            vhat += p * out[static_cast<std::size_t>(cid)];
        const double grow = (m.alpha + m.nu * node.mu + node.lambda_next * vhat) /
                            (r + m.alpha - m.theta);
        out[static_cast<std::size_t>(node.id)] =
            std::max(fh[static_cast<std::size_t>(node.id)], grow);
    }
    return out;
}

double asymptotic_slope(const StateTree& tree, int node_id, const ModelConfig& cfg) {
    return asymptotic_slope_table(tree, cfg).at(static_cast<std::size_t>(node_id));
}

std::vector<double> l_factor_table(const StateTree& tree, const ModelConfig& cfg) {
    const auto fh = moneys_worth_table(tree, cfg);
    const MarketParams& m = cfg.market;
    std::vector<double> out(tree.size(), 0.0);
    for (auto it = tree.nodes.rbegin(); it != tree.nodes.rend(); ++it) {
        const StateNode& node = *it;
        const double r = effective_rate(cfg, node.n, node.mu);
        double cont = 0.0;
        for (const auto& [cid, p] : node.children) {
            const StateNode& child = tree.nodes[static_cast<std::size_t>(cid)];
            const double rc = effective_rate(cfg, child.n, child.mu);
            cont += p * (fh[static_cast<std::size_t>(cid)] +
                         std::max(out[static_cast<std::size_t>(cid)], 0.0) /
                             (rc + m.alpha - m.theta));
        }
        out[static_cast<std::size_t>(node.id)] =
            (fh[static_cast<std::size_t>(node.id)] - beta(cfg, node.n, node.mu)) *
                (m.theta - m.alpha - r) +
            node.lambda_next * cont;
    }
    return out;
}

std::vector<double> growth_bound_table(const StateTree& tree, const ModelConfig& cfg) {
    const auto fh = moneys_worth_table(tree, cfg);
    const MarketParams& m = cfg.market;
    std::vector<double> out(tree.size(), 0.0);
    for (auto it = tree.nodes.rbegin(); it != tree.nodes.rend(); ++it) {
        const StateNode& node = *it;
        const double r = effective_rate(cfg, node.n, node.mu);
        double lhat = 0.0;
        for (const auto& [cid, p] : node.children)
            lhat += p * out[static_cast<std::size_t>(cid)];
        const double f = fh[static_cast<std::size_t>(node.id)];
        const double a = f * std::fabs(m.K) + node.lambda_next * lhat / r;
        const double b = f + (m.alpha + m.nu * node.mu + node.lambda_next * lhat) /
                                 (r + m.alpha - m.theta);
        out[static_cast<std::size_t>(node.id)] = std::max(a, b);
    }
    return out;
}

double stage_value_at(const StageValue& sv, double x, bool prefer_closed_form) {
    if (!(x >= 0.0)) throw InvalidParamError("stage_value_at needs x >= 0");
    if (prefer_closed_form && sv.closed_form) return value_terminal(*sv.closed_form, x);
    if (x == 0.0) return sv.value_at_zero;
    if (x <= sv.grid.front()) {
        const double s = (sv.values.front() - sv.value_at_zero) / sv.grid.front();
        return sv.value_at_zero + s * x;
    }
    if (x >= sv.grid.back())
        return sv.values.back() + sv.asymptotic_slope * (x - sv.grid.back());
    MonotoneCubic interp(sv.grid, sv.values);
    return interp.eval(x);
}

namespace {

/// Probability-weighted child values with cached interpolants and linear tails.
class ChildMix {
public:
    ChildMix(const StateTree& tree, int node_id, const std::vector<StageValue>& stages,
             bool prefer_closed_form) {
        const StateNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
        for (const auto& [cid, p] : node.children) {
            if (static_cast<std::size_t>(cid) >= stages.size() ||
                stages[static_cast<std::size_t>(cid)].grid.empty())
                throw ChildrenUnsolvedError("child stage value missing in assemble_M");
            const StageValue& sv = stages[static_cast<std::size_t>(cid)];
            Entry e;
            e.p = p;
            e.sv = &sv;
            e.use_closed_form = prefer_closed_form && sv.closed_form.has_value();
            if (!e.use_closed_form) e.interp = MonotoneCubic(sv.grid, sv.values);
            at_zero += p * sv.value_at_zero;
            slope_below += p * (sv.values.front() - sv.value_at_zero) / sv.grid.front();
            slope_above += p * sv.asymptotic_slope;
            intercept_above +=
                p * (sv.values.back() - sv.asymptotic_slope * sv.grid.back());
            entries_.push_back(std::move(e));
        }
    }

    double operator()(double x) const {
        double v = 0.0;
        for (const auto& e : entries_) v += e.p * eval_one(e, x);
        return v;
    }

    double at_zero = 0.0, slope_below = 0.0;
    double intercept_above = 0.0, slope_above = 0.0;

private:
    struct Entry {
        double p = 0.0;
        const StageValue* sv = nullptr;
        MonotoneCubic interp;
        bool use_closed_form = false;
    };

    static double eval_one(const Entry& e, double x) {
        if (e.use_closed_form) return value_terminal(*e.sv->closed_form, x);
        if (x <= e.sv->grid.front()) {
            const double s =
                (e.sv->values.front() - e.sv->value_at_zero) / e.sv->grid.front();
            return e.sv->value_at_zero + s * x;
        }
        if (x >= e.sv->grid.back())
            return e.sv->values.back() + e.sv->asymptotic_slope * (x - e.sv->grid.back());
        return e.interp.eval(x);
    }

    std::vector<Entry> entries_;
};

}  // namespace

RunningReward assemble_M(const StateTree& tree, int node_id,
                         const std::vector<StageValue>& stages, const ModelConfig& cfg,
                         bool prefer_closed_form) {
    const StateNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
    const MarketParams& m = cfg.market;
    const double r = effective_rate(cfg, node.n, node.mu);
    const double fh = moneys_worth(tree, node_id, cfg);
    const double b = beta(cfg, node.n, node.mu);

    RunningReward M;
    M.intercept = r * fh * m.K;
    M.slope = (fh - b) * (m.theta - m.alpha - r);
    M.lambda = node.lambda_next;
    if (!node.children.empty()) {
        auto mix = std::make_shared<ChildMix>(tree, node_id, stages, prefer_closed_form);
        M.mix_at_zero = mix->at_zero;
        M.mix_slope_below = mix->slope_below;
        M.mix_intercept_above = mix->intercept_above;
        M.mix_slope_above = mix->slope_above;
        M.child_mix = [mix](double x) { return (*mix)(x); };
    }
    return M;
}

WFunction compute_w(const ModelConfig& cfg, int node_id, const StateTree& tree,
                    const RunningReward& M, std::span<const double> knots,
                    const QuadratureOptions& opts) {
    const StateNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
    const MarketParams& m = cfg.market;
    const double r = effective_rate(cfg, node.n, node.mu);
    const double fh = moneys_worth(tree, node_id, cfg);
    const double b = beta(cfg, node.n, node.mu);

    WFunction w;
    w.affine_intercept = fh * m.K;
    w.affine_slope = -(fh - b);
    w.lambda = M.lambda;
    if (M.child_mix && M.lambda > 0.0)
        w.mix_resolvent = std::make_shared<GreenResolvent>(
            m, r, M.child_mix, knots, M.mix_at_zero, M.mix_slope_below,
            M.mix_intercept_above, M.mix_slope_above, opts);
    return w;
}

MajorantResult concave_majorant(std::span<const double> y, std::span<const double> h,
                                double slope_at_infinity) {
    if (std::isinf(slope_at_infinity) && slope_at_infinity > 0.0)
        throw UnboundedValueError("transformed obstacle grows linearly at infinity");
    const std::size_t m = y.size();
    if (m == 0 || h.size() != m)
        throw InvalidParamError("concave_majorant: need matching nonempty arrays");
    for (std::size_t i = 0; i < m; ++i) {
        if (!std::isfinite(h[i]) || !(y[i] > 0.0) || (i > 0 && !(y[i] > y[i - 1])))
            throw InvalidParamError("concave_majorant: y must increase, h finite");
    }

    struct Pt {
        double y, v;
    };
    auto cross = [](const Pt& a, const Pt& b, const Pt& c) {
        // h1 h2 (slope(b,c) - slope(a,b)); positive means b must be popped
        return (b.y - a.y) * (c.v - a.v) - (b.v - a.v) * (c.y - a.y);
    };
    std::vector<Pt> hull;
    hull.reserve(m + 1);
    hull.push_back({0.0, 0.0});
    for (std::size_t i = 0; i < m; ++i) {
        const Pt c{y[i], std::max(h[i], 0.0)};
        while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), c) > 0.0)
            hull.pop_back();
        hull.push_back(c);
    }
    // final slope must be >= slope_at_infinity for the ray to fit under a
    // concave envelope
    while (hull.size() >= 2) {
        const Pt& a = hull[hull.size() - 2];
        const Pt& b = hull.back();
        if (b.v - a.v < slope_at_infinity * (b.y - a.y))
            hull.pop_back();
        else
            break;
    }

    MajorantResult out;
    out.y_grid.assign(y.begin(), y.end());
    out.h.assign(h.begin(), h.end());
    out.U.resize(m);
    out.contact.resize(m);
    std::size_t seg = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (y[i] >= hull.back().y) {
            out.U[i] = hull.back().v + slope_at_infinity * (y[i] - hull.back().y);
        } else {
            while (seg + 1 < hull.size() && hull[seg + 1].y < y[i]) ++seg;
            const Pt& a = hull[seg];
            const Pt& b = hull[seg + 1];
            out.U[i] = a.v + (b.v - a.v) * (y[i] - a.y) / (b.y - a.y);
        }
        const double scale = std::max(std::fabs(h[i]), std::fabs(out.U[i]));
        out.contact[i] = (out.U[i] - h[i]) <= 1e-10 * scale ? 1 : 0;
    }
    return out;
}

Regime classify_regime(double K, std::span<const double> w_grid,
                       std::span<const double> m_grid, double P, double l_factor,
                       bool* ambiguous, const std::function<double(double)>* m_far,
                       double x_far) {
    if (ambiguous) *ambiguous = false;
    if (K == 0.0)
        return l_factor > 0.0 ? Regime::K0NeverStop : Regime::K0StopEverywhere;

    const double tie = 1e-12;
    const bool p_tied = std::fabs(P) <= tie;
    auto all_w_positive = [&] {
        for (double w : w_grid)
            if (!(w > 0.0)) return false;
        return true;
    };

    if (K > 0.0) {
        if (p_tied) {
            if (ambiguous) *ambiguous = true;
            // degenerate asymptote: decide from the far-field sign of M
            if (m_far && x_far > 0.0 && (*m_far)(x_far) < 0.0) return Regime::Case2StopAbove;
            return all_w_positive() ? Regime::Case1NeverStop : Regime::Case3StopInterval;
        }
        if (P < 0.0) return Regime::Case2StopAbove;
        return all_w_positive() ? Regime::Case1NeverStop : Regime::Case3StopInterval;
    }

    // K < 0
    for (double v : m_grid)
        if (v > 0.0) return Regime::Case4StopBelow;
    if (P > tie) return Regime::Case4StopBelow;
    if (p_tied && ambiguous) *ambiguous = true;
    return Regime::Case5StopEverywhere;
}

namespace {

Regime terminal_regime_tag(TerminalRegime r) {
    switch (r) {
        case TerminalRegime::NeverStop: return Regime::Case1NeverStop;
        case TerminalRegime::StopAbove: return Regime::Case2StopAbove;
        case TerminalRegime::StopBelow: return Regime::Case4StopBelow;
        case TerminalRegime::StopEverywhere: return Regime::Case5StopEverywhere;
        case TerminalRegime::K0NeverStop: return Regime::K0NeverStop;
        case TerminalRegime::K0StopEverywhere: return Regime::K0StopEverywhere;
    }
    throw std::logic_error("unreachable");
}

StageValue solve_terminal_node(const StateTree& tree, int node_id, const ModelConfig& cfg,
                               WealthGrid grid) {
    const StateNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
    const MarketParams& m = cfg.market;
    TerminalSolution ts = solve_terminal(cfg, node.mu);

    // keep thresholds strictly inside the tabulated range
    double lo = grid.x_lo(), hi = grid.x_hi();
    const double thr = ts.x_star ? *ts.x_star : (ts.x_star_star ? *ts.x_star_star : 0.0);
    if (thr > 0.0) {
        while (thr >= hi / 10.0) hi *= 10.0;
        while (thr <= lo * 10.0) lo /= 10.0;
    }
    if (lo != grid.x_lo() || hi != grid.x_hi())
        grid = WealthGrid::make(lo, hi, static_cast<int>(grid.size()));

    StageValue sv;
    sv.node_id = node_id;
    sv.closed_form = ts;
    sv.regime = terminal_regime_tag(ts.regime);
    if (ts.x_star) sv.thresholds = {*ts.x_star};
    if (ts.x_star_star) sv.thresholds = {*ts.x_star_star};
    sv.grid = grid.points;
    sv.f_hat = ts.f_hat;
    sv.beta = ts.beta;
    sv.rate = ts.rate;
    sv.lambda = 0.0;
    sv.roots = GbmRoots{ts.gamma_plus, ts.gamma_minus, ts.rate};
    sv.p_indicator = (ts.f_hat - ts.beta) * (m.theta - m.alpha - ts.rate);
    sv.asymptotic_slope = std::max(ts.f_hat, ts.beta);
    const bool zero_stops = ts.regime == TerminalRegime::StopBelow ||
                            ts.regime == TerminalRegime::StopEverywhere;
    sv.value_at_zero = zero_stops ? -ts.f_hat * m.K : 0.0;

    const std::size_t n = sv.grid.size();
    sv.values.resize(n);
    sv.obstacle_gap.resize(n);
    sv.running_reward.resize(n);
    sv.w_values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = sv.grid[i];
        sv.values[i] = value_terminal(ts, x);
        const double obstacle = m.K == 0.0 ? ts.f_hat * x : ts.f_hat * (x - m.K);
        sv.obstacle_gap[i] = sv.values[i] - obstacle;
        sv.running_reward[i] =
            (m.rho_hat + m.mu_hat) * m.K + sv.p_indicator * x;
        sv.w_values[i] = ts.f_hat * m.K - (ts.f_hat - ts.beta) * x;
    }
    return sv;
}

struct Attempt {
    bool widen_lo = false;
    bool widen_hi = false;
    StageValue sv;
    bool ok() const { return !widen_lo && !widen_hi; }
};

// transformed obstacle evaluator and its five-point derivative
struct TransformedObstacle {
    const WFunction* w;
    double gamma_minus;
    double gamma_span;  // gamma_plus - gamma_minus

    double operator()(double yv) const {
        const double lx = std::log(yv) / gamma_span;
        const double x = std::exp(lx);
        return -(*w)(x)*std::exp(-gamma_minus * lx);
    }
    double derivative(double yv) const {
        const double step = 1e-4 * yv;
        const double f1 = (*this)(yv + step), f2 = (*this)(yv + 2 * step);
        const double b1 = (*this)(yv - step), b2 = (*this)(yv - 2 * step);
        return (-f2 + 8 * f1 - 8 * b1 + b2) / (12 * step);
    }
};

/// bisect D over [a, b] to 1e-10 relative in y; returns NaN without a sign change
template <class D>
double bisect_y(const D& d, double a, double b) {
    double da = d(a), db = d(b);
    if (da == 0.0) return a;
    if (db == 0.0) return b;
    if ((da > 0.0) == (db > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    for (int it = 0; it < 200 && (b - a) > 1e-10 * b; ++it) {
        const double mid = 0.5 * (a + b);
        const double dm = d(mid);
        if (dm == 0.0) return mid;
        if ((dm > 0.0) == (da > 0.0)) {
            a = mid;
            da = dm;
        } else {
            b = mid;
        }
    }
    return 0.5 * (a + b);
}

/// expands the bracket around [i_lo, i_hi] until D changes sign; NaN on failure
template <class D>
double refine_boundary(const D& d, std::span<const double> y, std::ptrdiff_t i_lo,
                       std::ptrdiff_t i_hi) {
    const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(y.size());
    for (int expand = 0; expand < 6; ++expand) {
        const std::ptrdiff_t a = std::max<std::ptrdiff_t>(0, i_lo - expand);
        const std::ptrdiff_t b = std::min(m - 1, i_hi + expand);
        const double root = bisect_y(d, y[static_cast<std::size_t>(a)],
                                     y[static_cast<std::size_t>(b)]);
        if (std::isfinite(root)) return root;
        if (a == 0 && b == m - 1) break;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

Attempt try_solve_nonterminal(const StateTree& tree, int node_id,
                              const std::vector<StageValue>& stages,
                              const ModelConfig& cfg, const WealthGrid& grid,
                              const SolverOptions& opts) {
    const StateNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
    const MarketParams& m = cfg.market;
    const double r = effective_rate(cfg, node.n, node.mu);
    const double fh = moneys_worth(tree, node_id, cfg);
    const double bcoef = beta(cfg, node.n, node.mu);
    const double lambda = node.lambda_next;
    const GbmRoots roots = characteristic_roots(m, r);
    const double gm = roots.gamma_minus, gp = roots.gamma_plus;
    const double span = gp - gm;

    RunningReward M =
        assemble_M(tree, node_id, stages, cfg, opts.use_closed_form_children);
    WFunction w = compute_w(cfg, node_id, tree, M, grid.points, opts.quadrature);

    const auto vinf = asymptotic_slope_table(tree, cfg);
    double vhat_inf = 0.0;
    for (const auto& [cid, p] : node.children)
        vhat_inf += p * vinf[static_cast<std::size_t>(cid)];
    const double P = M.slope + lambda * vhat_inf;

    const std::size_t n = grid.size();
    std::vector<double> w_grid(n), m_grid(n);
    {
        std::vector<double> res_knots;
        if (w.mix_resolvent) res_knots = w.mix_resolvent->values_at_knots();
        for (std::size_t i = 0; i < n; ++i) {
            const double x = grid.points[i];
            w_grid[i] = w.affine_intercept + w.affine_slope * x;
            if (w.mix_resolvent && lambda > 0.0) w_grid[i] += lambda * res_knots[i];
            m_grid[i] = M(x);
        }
    }

    Attempt out;
    StageValue& sv = out.sv;
    sv.node_id = node_id;
    sv.grid = grid.points;
    sv.f_hat = fh;
    sv.beta = bcoef;
    sv.rate = r;
    sv.lambda = lambda;
    sv.roots = roots;
    sv.p_indicator = P;
    sv.w_values = w_grid;
    sv.running_reward = m_grid;
    sv.asymptotic_slope = vinf[static_cast<std::size_t>(node_id)];

    const auto l_tbl = l_factor_table(tree, cfg);
    const double l_here = l_tbl[static_cast<std::size_t>(node_id)];

    // K = 0 closed form (Lagrange reward is exactly linear)
    if (m.K == 0.0 && !opts.force_majorant_for_k0) {
        const double slope = fh + std::max(l_here, 0.0) / (r + m.alpha - m.theta);
        sv.regime = l_here > 0.0 ? Regime::K0NeverStop : Regime::K0StopEverywhere;
        sv.value_at_zero = 0.0;
        sv.values.resize(n);
        sv.obstacle_gap.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            sv.values[i] = slope * grid.points[i];
            sv.obstacle_gap[i] = sv.values[i] - fh * grid.points[i];
        }
        return out;
    }

    // Dayanik-Karatzas transform: y = x^{gamma+ - gamma-}, obstacle -w/phi
    std::vector<double> y_grid(n), h_grid(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(grid.points[i]);
        y_grid[i] = std::exp(span * lx);
        h_grid[i] = -w_grid[i] * std::exp(-gm * lx);
    }
    MajorantResult maj = concave_majorant(y_grid, h_grid, 0.0);

    std::function<double(double)> m_fn = [&M](double x) { return M(x); };
    bool ambiguous = false;
    const Regime regime = classify_regime(m.K, w_grid, m_grid, P, l_here, &ambiguous,
                                          &m_fn, 1e3 * grid.x_hi());
    sv.regime = regime;
    sv.ambiguous_asymptote = ambiguous;

    // loose contact flags tolerate quadrature noise when locating brackets
    std::vector<char> loose(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double scale = std::max(std::fabs(h_grid[i]), std::fabs(maj.U[i]));
        loose[i] = (maj.U[i] - h_grid[i]) <= 1e-7 * scale ? 1 : 0;
    }

    const TransformedObstacle hfun{&w, gm, span};
    auto d_origin_tangent = [&](double yv) {
        return yv * hfun.derivative(yv) - hfun(yv);
    };
    auto d_peak = [&](double yv) { return hfun.derivative(yv); };

    const double x_lo = grid.x_lo();
    auto x_of_y = [&](double yv) { return std::exp(std::log(yv) / span); };

    double b_low = std::numeric_limits<double>::quiet_NaN();   // case 2/3 entry
    double b_high = std::numeric_limits<double>::quiet_NaN();  // case 3/4 exit

    switch (regime) {
        case Regime::Case1NeverStop: {
            // convex w still falling at the right edge may hide a dip beyond
            if (P > 0.0 && n >= 2 && w_grid[n - 1] < w_grid[n - 2]) {
                out.widen_hi = true;
                return out;
            }
            if (w(x_lo / 100.0) < 0.0) {
                out.widen_lo = true;
                return out;
            }
            break;
        }
        case Regime::Case2StopAbove: {
            if (!loose[n - 1]) {
                out.widen_hi = true;
                return out;
            }
            std::size_t j = n - 1;
            while (j > 0 && loose[j - 1]) --j;
            if (j == 0) {
                out.widen_lo = true;
                return out;
            }
            const double root = refine_boundary(
                d_origin_tangent, y_grid, static_cast<std::ptrdiff_t>(j) - 1,
                static_cast<std::ptrdiff_t>(j));
            b_low = std::isfinite(root) ? root : y_grid[j];
            break;
        }
        case Regime::Case4StopBelow: {
            if (loose[n - 1]) {
                out.widen_hi = true;
                return out;
            }
            if (!loose[0]) {
                out.widen_lo = true;
                return out;
            }
            std::size_t k = 0;
            while (k + 1 < n && loose[k + 1]) ++k;
            const double root =
                refine_boundary(d_peak, y_grid, static_cast<std::ptrdiff_t>(k),
                                static_cast<std::ptrdiff_t>(k) + 1);
            b_high = std::isfinite(root) ? root : y_grid[k];
            break;
        }
        case Regime::Case3StopInterval: {
            if (!(w_grid[0] > 0.0)) {
                out.widen_lo = true;
                return out;
            }
            if (!(w_grid[n - 1] > 0.0)) {
                out.widen_hi = true;
                return out;
            }
            // locate the interior contact pocket
            std::size_t j = 0;
            while (j < n && !loose[j]) ++j;
            if (j == n) {
                // razor-thin pocket: refine around the smallest gap
                std::size_t imin = 0;
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i < n; ++i) {
                    const double scale =
                        std::max({std::fabs(h_grid[i]), std::fabs(maj.U[i]), 1e-300});
                    const double gap = (maj.U[i] - h_grid[i]) / scale;
                    if (gap < best) {
                        best = gap;
                        imin = i;
                    }
                }
                j = imin;
            }
            std::size_t k = j;
            while (k + 1 < n && loose[k + 1]) ++k;
            if (j == 0) {
                out.widen_lo = true;
                return out;
            }
            if (k == n - 1) {
                out.widen_hi = true;
                return out;
            }
            const double lo_root = refine_boundary(
                d_origin_tangent, y_grid, static_cast<std::ptrdiff_t>(j) - 1,
                static_cast<std::ptrdiff_t>(j));
            const double hi_root =
                refine_boundary(d_peak, y_grid, static_cast<std::ptrdiff_t>(k),
                                static_cast<std::ptrdiff_t>(k) + 1);
            b_low = std::isfinite(lo_root) ? lo_root : y_grid[j];
            b_high = std::isfinite(hi_root) ? hi_root : y_grid[k];
            if (b_high < b_low) b_high = b_low;
            break;
        }
        case Regime::Case5StopEverywhere:
        case Regime::K0NeverStop:
        case Regime::K0StopEverywhere:
            break;
    }

    // thresholds in wealth coordinates, plus the boundary-guard widening
    auto guard = [&](double bx) {
        if (bx <= grid.points[1]) out.widen_lo = true;
        if (bx >= grid.points[n - 2]) out.widen_hi = true;
    };
    double bx_low = 0.0, bx_high = 0.0;
    if (std::isfinite(b_low)) {
        bx_low = x_of_y(b_low);
        guard(bx_low);
    }
    if (std::isfinite(b_high)) {
        bx_high = x_of_y(b_high);
        guard(bx_high);
    }
    if (!out.ok()) return out;

    // rebuild U from the refined tangencies and tabulate the value function
    sv.values.resize(n);
    sv.obstacle_gap.resize(n);
    auto obstacle = [&](double x) { return fh * (x - m.K); };
    const double s_tangent =
        std::isfinite(b_low) ? hfun(b_low) / b_low : 0.0;  // chord through origin
    const double u_const = std::isfinite(b_high) ? hfun(b_high) : 0.0;

    maj.tangency_points.clear();
    switch (regime) {
        case Regime::Case1NeverStop:
        case Regime::K0NeverStop: {
            for (std::size_t i = 0; i < n; ++i) {
                sv.obstacle_gap[i] = w_grid[i];
                sv.values[i] = w_grid[i] + obstacle(grid.points[i]);
                maj.U[i] = 0.0;
                maj.contact[i] = 0;
            }
            break;
        }
        case Regime::Case5StopEverywhere:
        case Regime::K0StopEverywhere: {
            for (std::size_t i = 0; i < n; ++i) {
                sv.obstacle_gap[i] = 0.0;
                sv.values[i] = obstacle(grid.points[i]);
                maj.U[i] = h_grid[i];
                maj.contact[i] = 1;
            }
            break;
        }
        case Regime::Case2StopAbove: {
            sv.thresholds = {bx_low};
            maj.tangency_points = {b_low};
            for (std::size_t i = 0; i < n; ++i) {
                const double x = grid.points[i];
                if (x >= bx_low) {
                    sv.obstacle_gap[i] = 0.0;
                    sv.values[i] = obstacle(x);
                    maj.U[i] = h_grid[i];
                    maj.contact[i] = 1;
                } else {
                    const double power = s_tangent * std::exp(gp * std::log(x));
                    sv.obstacle_gap[i] = w_grid[i] + power;
                    sv.values[i] = sv.obstacle_gap[i] + obstacle(x);
                    maj.U[i] = s_tangent * y_grid[i];
                    maj.contact[i] = 0;
                }
            }
            break;
        }
        case Regime::Case4StopBelow: {
            sv.thresholds = {bx_high};
            maj.tangency_points = {b_high};
            for (std::size_t i = 0; i < n; ++i) {
                const double x = grid.points[i];
                if (x <= bx_high) {
                    sv.obstacle_gap[i] = 0.0;
                    sv.values[i] = obstacle(x);
                    maj.U[i] = h_grid[i];
                    maj.contact[i] = 1;
                } else {
                    const double power = u_const * std::exp(gm * std::log(x));
                    sv.obstacle_gap[i] = w_grid[i] + power;
                    sv.values[i] = sv.obstacle_gap[i] + obstacle(x);
                    maj.U[i] = u_const;
                    maj.contact[i] = 0;
                }
            }
            break;
        }
        case Regime::Case3StopInterval: {
            sv.thresholds = {bx_low, bx_high};
            maj.tangency_points = {b_low, b_high};
            for (std::size_t i = 0; i < n; ++i) {
                const double x = grid.points[i];
                if (x >= bx_low && x <= bx_high) {
                    sv.obstacle_gap[i] = 0.0;
                    sv.values[i] = obstacle(x);
                    maj.U[i] = h_grid[i];
                    maj.contact[i] = 1;
                } else if (x < bx_low) {
                    const double power = s_tangent * std::exp(gp * std::log(x));
                    sv.obstacle_gap[i] = w_grid[i] + power;
                    sv.values[i] = sv.obstacle_gap[i] + obstacle(x);
                    maj.U[i] = s_tangent * y_grid[i];
                    maj.contact[i] = 0;
                } else {
                    const double power = u_const * std::exp(gm * std::log(x));
                    sv.obstacle_gap[i] = w_grid[i] + power;
                    sv.values[i] = sv.obstacle_gap[i] + obstacle(x);
                    maj.U[i] = u_const;
                    maj.contact[i] = 0;
                }
            }
            break;
        }
    }

    // limit of V at zero wealth: stopped regimes take the obstacle, continuation
    // regimes inherit the discounted child values
    const bool zero_stops = regime == Regime::Case4StopBelow ||
                            regime == Regime::Case5StopEverywhere;
    if (m.K == 0.0)
        sv.value_at_zero = 0.0;
    else if (zero_stops)
        sv.value_at_zero = -fh * m.K;
    else
        sv.value_at_zero = lambda * M.mix_at_zero / r;

    sv.majorant = std::move(maj);
    return out;
}

}  // namespace

StageValue solve_stage(const StateTree& tree, int node_id,
                       const std::vector<StageValue>& stages, const ModelConfig& cfg,
                       const WealthGrid& grid, const SolverOptions& opts) {
    const StateNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
    if (node.children.empty()) return solve_terminal_node(tree, node_id, cfg, grid);

    WealthGrid g = grid;
    for (int attempt = 0; attempt <= opts.max_widenings; ++attempt) {
        Attempt a = try_solve_nonterminal(tree, node_id, stages, cfg, g, opts);
        if (a.ok()) return std::move(a.sv);
        double lo = g.x_lo(), hi = g.x_hi();
        if (a.widen_lo) lo /= 10.0;
        if (a.widen_hi) hi *= 10.0;
        g = WealthGrid::make(lo, hi, static_cast<int>(g.size()));
    }
    std::ostringstream os;
    os << "stopping boundary not resolved within " << opts.max_widenings
       << " grid widenings at node " << node_id;
    throw GridExhaustedError(os.str());
}

Solution solve_all(const ModelConfig& cfg, const SolverOptions& opts) {
    Solution sol;
    sol.config = cfg;
    sol.tree = enumerate_states(cfg);
    sol.stages.resize(sol.tree.size());

    const double kscale = std::max(std::fabs(cfg.market.K), 1.0);
    const double lo = opts.x_lo > 0.0 ? opts.x_lo : 1e-2 * kscale;
    const double hi = opts.x_hi > 0.0 ? opts.x_hi : 1e3 * kscale;
    const WealthGrid grid = WealthGrid::make(lo, hi, opts.grid_points);

    for (int n = cfg.pdmp.N; n >= 0; --n) {
        for (int id : sol.tree.stage_ids(n))
            sol.stages[static_cast<std::size_t>(id)] =
                solve_stage(sol.tree, id, sol.stages, cfg, grid, opts);
    }
    return sol;
}

double value_at(const Solution& sol, int node_id, double x) {
    return stage_value_at(sol.stages.at(static_cast<std::size_t>(node_id)), x, true);
}

}  // namespace annuity
