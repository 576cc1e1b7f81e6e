#pragma once

#include <functional>
#include <span>
#include <vector>

#include "annuity/common.hpp"
#include "annuity/model.hpp"

namespace annuity {

/// Roots of (1/2) sigma^2 g (g - 1) + (theta - alpha) g - r = 0.
struct GbmRoots {
    double gamma_plus = 0.0;   ///< > 1
    double gamma_minus = 0.0;  ///< < 0
    double rate = 0.0;         ///< the discount r used
};

/// Requires r > max(0, theta - alpha).
GbmRoots characteristic_roots(const MarketParams& market, double r);

/// E_x[ int_0^inf e^{-rt} (a + b X_t) dt ] = a/r + b x / (r + alpha - theta).
double resolvent_affine(const MarketParams& market, double r, double a, double b, double x);

struct QuadratureOptions {
    double rel_tol = 1e-9;    ///< panel halving tolerance
    double tail_cut = 1e-14;  ///< tail truncation relative to the integrand peak
    int max_depth = 30;       ///< panel halving depth cap
};

/// E_x[ int_0^inf e^{-rt} g(X_t) dt ] by the Green-kernel quadrature
///   R g(x) = 2/(sigma^2 (g+ - g-)) [ x^{g-} int_0^x y^{-g- - 1} g(y) dy
///                                  + x^{g+} int_x^inf y^{-g+ - 1} g(y) dy ],
/// computed in log coordinates with adaptive Gauss-Legendre panels. g must be
/// evaluable on (0, inf) and asymptotically at-most-linear near 0; superlinear
/// growth at infinity raises NonIntegrableError when the tail diverges.
double resolvent_quadrature(const MarketParams& market, double r,
                            const std::function<double(double)>& g, double x,
                            const QuadratureOptions& opts = {});

/// Resolvent of a payoff that is smooth between given knots and exactly linear
/// outside them. Panel integrals between knots are cached so that evaluations
/// at arbitrary points cost one partial panel.
class GreenResolvent {
public:
    GreenResolvent(const MarketParams& market, double r, std::function<double(double)> g,
                   std::span<const double> knots, double g_at_zero, double slope_below,
                   double intercept_above, double slope_above,
                   const QuadratureOptions& opts = {});

    double value(double x) const;
    /// d/dx of value; uses the cancellation of the kernel's boundary terms.
    double derivative(double x) const;
    const GbmRoots& roots() const { return roots_; }
    /// value at every knot, in order (uses the cached prefix sums directly)
    std::vector<double> values_at_knots() const;

private:
    // I_minus(u) = int_{-inf}^{u} e^{-g- s} g(e^s) ds, I_plus analogous.
    double lower_integral(double u) const;
    double upper_integral(double u) const;

    MarketParams market_;
    GbmRoots roots_;
    std::function<double(double)> g_;
    double g_at_zero_ = 0.0;
    double slope_below_ = 0.0;
    double intercept_above_ = 0.0;
    double slope_above_ = 0.0;
    std::vector<double> knots_log_;
    std::vector<double> prefix_lo_;  ///< I_minus at each knot
    std::vector<double> suffix_hi_;  ///< I_plus at each knot
    double scale_ = 1.0;
    QuadratureOptions opts_;
};

}  // namespace annuity
