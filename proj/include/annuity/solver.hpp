#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "annuity/diffusion.hpp"
#include "annuity/model.hpp"
#include "annuity/mortality.hpp"
#include "annuity/terminal.hpp"

namespace annuity {

/// Strictly increasing log-spaced wealth grid.
struct WealthGrid {
    std::vector<double> points;

    double x_lo() const { return points.front(); }
    double x_hi() const { return points.back(); }
    std::size_t size() const { return points.size(); }

    /// Default bounds [1e-2, 1e3] * max(|K|, 1).
    static WealthGrid make_default(double K, int count = 2000);
    static WealthGrid make(double lo, double hi, int count);
};

enum class Regime {
    Case1NeverStop,      ///< K > 0, stopping set empty
    Case2StopAbove,      ///< K > 0, stopping set [b, inf)
    Case3StopInterval,   ///< K > 0, stopping set [b1, b2]
    Case4StopBelow,      ///< K < 0, stopping set [0, b]
    Case5StopEverywhere, ///< K < 0, stopping set [0, inf)
    K0NeverStop,         ///< K = 0, only {0} stops
    K0StopEverywhere,    ///< K = 0, stop everywhere
};

const char* regime_name(Regime r);

/// Concave-majorant output in transformed coordinates y = x^{gamma+ - gamma-}.
struct MajorantResult {
    std::vector<double> y_grid;
    std::vector<double> h;        ///< transformed obstacle (-w/phi) o F^{-1}
    std::vector<double> U;        ///< smallest nonnegative concave majorant
    std::vector<char> contact;    ///< U == h within tolerance
    std::vector<double> tangency_points;  ///< refined contact boundaries (y)
};

/// Smallest nonnegative concave function dominating the points
/// {(0,0)} u {(y_i, max(h_i, 0))}, extended past the last point by a ray of
/// slope `slope_at_infinity`. Upper-hull monotone chain, O(m).
MajorantResult concave_majorant(std::span<const double> y, std::span<const double> h,
                                double slope_at_infinity);

/// Per-state solution: regime, thresholds, value table and diagnostics.
struct StageValue {
    int node_id = 0;
    Regime regime = Regime::Case1NeverStop;
    std::vector<double> thresholds;  ///< 0, 1 (b) or 2 (b1 <= b2) wealth values
    std::vector<double> grid;        ///< wealth knots
    std::vector<double> values;      ///< V on the grid
    std::vector<double> obstacle_gap;    ///< W = V - f_hat (x - K)
    std::vector<double> running_reward;  ///< M on the grid
    std::vector<double> w_values;        ///< w_N on the grid
    double asymptotic_slope = 0.0;
    double value_at_zero = 0.0;
    double f_hat = 0.0;
    double beta = 0.0;
    double rate = 0.0;
    double lambda = 0.0;
    double p_indicator = 0.0;  ///< P(n, mu); sign drives the M asymptote
    GbmRoots roots;
    bool ambiguous_asymptote = false;
    std::optional<TerminalSolution> closed_form;
    std::optional<MajorantResult> majorant;
};

struct Solution {
    ModelConfig config;
    StateTree tree;
    std::vector<StageValue> stages;  ///< indexed by node id
};

struct SolverOptions {
    int grid_points = 2000;
    double x_lo = 0.0;  ///< 0 = auto (1e-2 * max(|K|,1))
    double x_hi = 0.0;  ///< 0 = auto (1e3 * max(|K|,1))
    bool use_closed_form_children = false;
    bool force_majorant_for_k0 = false;
    int max_widenings = 3;
    QuadratureOptions quadrature;
};

/// V_inf(n, mu): backward recursion
///   V_inf(N, mu) = max{beta, f_hat}
///   V_inf(n, mu) = max{f_hat, (alpha + nu mu + lambda_{n+1} sum p_i V_inf_i)
///                              / (r_n(mu) + alpha - theta)}.
std::vector<double> asymptotic_slope_table(const StateTree& tree, const ModelConfig& cfg);
double asymptotic_slope(const StateTree& tree, int node_id, const ModelConfig& cfg);

/// L(n, mu) recursion used by the K = 0 closed form.
std::vector<double> l_factor_table(const StateTree& tree, const ModelConfig& cfg);

/// Node-wise constants L with V <= L (1 + x) (linear growth bound).
std::vector<double> growth_bound_table(const StateTree& tree, const ModelConfig& cfg);

/// M^N(x, n, mu) split into its affine part and the child-value mixture.
struct RunningReward {
    double intercept = 0.0;  ///< r_n f_hat K
    double slope = 0.0;      ///< (f_hat - beta)(theta - alpha - r_n)
    double lambda = 0.0;
    std::function<double(double)> child_mix;  ///< sum_i p_i V(.., n+1, z_i); null at stage N
    double mix_at_zero = 0.0;
    double mix_slope_below = 0.0;      ///< mixture tail below the child grids
    double mix_intercept_above = 0.0;  ///< mixture tail above the child grids
    double mix_slope_above = 0.0;

    double operator()(double x) const {
        double m = intercept + slope * x;
        if (lambda > 0.0 && child_mix) m += lambda * child_mix(x);
        return m;
    }
};

/// Builds M for a node whose children are already solved in `stages`.
/// Throws ChildrenUnsolvedError when a child entry is missing.
RunningReward assemble_M(const StateTree& tree, int node_id,
                         const std::vector<StageValue>& stages, const ModelConfig& cfg,
                         bool prefer_closed_form = false);

/// w_N = E_x int_0^inf e^{-rt} M(X_t) dt: affine part in closed form plus the
/// Green-kernel resolvent of the child mixture.
struct WFunction {
    double affine_intercept = 0.0;  ///< f_hat K
    double affine_slope = 0.0;      ///< -(f_hat - beta)
    double lambda = 0.0;
    std::shared_ptr<GreenResolvent> mix_resolvent;  ///< null at stage N

    double operator()(double x) const {
        double w = affine_intercept + affine_slope * x;
        if (lambda > 0.0 && mix_resolvent) w += lambda * mix_resolvent->value(x);
        return w;
    }
    double derivative(double x) const {
        double d = affine_slope;
        if (lambda > 0.0 && mix_resolvent) d += lambda * mix_resolvent->derivative(x);
        return d;
    }
};

WFunction compute_w(const ModelConfig& cfg, int node_id, const StateTree& tree,
                    const RunningReward& M, std::span<const double> knots,
                    const QuadratureOptions& opts = {});

/// Case tag from the sign pattern of w, M and the asymptote indicator P.
/// l_factor is consulted only when K = 0.
Regime classify_regime(double K, std::span<const double> w_grid,
                       std::span<const double> m_grid, double P, double l_factor,
                       bool* ambiguous = nullptr,
                       const std::function<double(double)>* m_far = nullptr,
                       double x_far = 0.0);

/// Solves one node given solved children (closed form at stage N, otherwise
/// Lagrange/Mayer reduction + Dayanik-Karatzas majorant with refined
/// tangencies).
StageValue solve_stage(const StateTree& tree, int node_id,
                       const std::vector<StageValue>& stages, const ModelConfig& cfg,
                       const WealthGrid& grid, const SolverOptions& opts = {});

/// Backward induction over the whole tree.
Solution solve_all(const ModelConfig& cfg, const SolverOptions& opts = {});

/// Value lookup with the interpolation/extrapolation contract used by the
/// solver itself (closed form when available, monotone cubic on the grid,
/// linear tails).
double value_at(const Solution& sol, int node_id, double x);
double stage_value_at(const StageValue& sv, double x, bool prefer_closed_form = true);

}  // namespace annuity
