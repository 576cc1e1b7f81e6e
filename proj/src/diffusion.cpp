#include "annuity/diffusion.hpp"

#include <algorithm>
#include <cmath>

namespace annuity {

namespace {

// 15-point Gauss-Legendre rule on [-1, 1] (symmetric half listed).
constexpr int kGlHalf = 8;
constexpr double kGlNode[kGlHalf] = {
    0.0000000000000000, 0.2011940939974345, 0.3941513470775634, 0.5709721726085388,
    0.7244177313601701, 0.8482065834104272, 0.9372733924007060, 0.9879925180204854};
constexpr double kGlWeight[kGlHalf] = {
    0.2025782419255613, 0.1984314853271116, 0.1861610000155622, 0.1662692058169939,
    0.1395706779261543, 0.1071592204671719, 0.0703660474881081, 0.0307532419961173};

template <class F>
double gauss15(const F& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double sum = kGlWeight[0] * f(c);
    for (int i = 1; i < kGlHalf; ++i)
        sum += kGlWeight[i] * (f(c + h * kGlNode[i]) + f(c - h * kGlNode[i]));
    return h * sum;
}

template <class F>
double adaptive_panel(const F& f, double a, double b, double rel_tol, int depth,
                      int max_depth) {
    const double whole = gauss15(f, a, b);
    const double mid = 0.5 * (a + b);
    const double left = gauss15(f, a, mid), right = gauss15(f, mid, b);
    const double split = left + right;
    if (std::fabs(split - whole) <= rel_tol * (std::fabs(split) + 1e-300)) return split;
    if (depth >= max_depth)
        throw QuadratureFailureError("panel refinement did not reach tolerance");
    return adaptive_panel(f, a, mid, rel_tol, depth + 1, max_depth) +
           adaptive_panel(f, mid, b, rel_tol, depth + 1, max_depth);
}

}  // namespace

GbmRoots characteristic_roots(const MarketParams& market, double r) {
    const double drift = market.theta - market.alpha;
    if (!(r > std::max(0.0, drift)))
        throw InvalidParamError("characteristic_roots requires r > max(0, theta - alpha)");
    const double s2 = market.sigma * market.sigma;
    const double b = 0.5 - drift / s2;
    const double disc = std::sqrt(b * b + 2.0 * r / s2);
    return GbmRoots{b + disc, b - disc, r};
}

double resolvent_affine(const MarketParams& market, double r, double a, double b,
                        double x) {
    const double denom = r + market.alpha - market.theta;
    if (!(r > 0.0) || !(denom > 0.0))
        throw InvalidParamError("resolvent_affine requires r > 0 and r + alpha - theta > 0");
    return a / r + b * x / denom;
}

// Tail primitives, with the e^{gamma * t_ref} scaling folded in:
//   int_{-inf}^{u} e^{-gm (s - ref)} (c + b e^s) ds
//     = c e^{-gm (u - ref)} / (-gm) + b e^{(1 - gm) u + gm ref} / (1 - gm)
//   int_{u}^{inf} e^{-gp (s - ref)} (c + b e^s) ds
//     = c e^{-gp (u - ref)} / gp + b e^{(1 - gp) u + gp ref} / (gp - 1)
namespace {

double tail_below(double u, double ref, double gm, double c, double b) {
    return c * std::exp(-gm * (u - ref)) / (-gm) +
           b * std::exp((1.0 - gm) * u + gm * ref) / (1.0 - gm);
}

double tail_above(double u, double ref, double gp, double c, double b) {
    return c * std::exp(-gp * (u - ref)) / gp +
           b * std::exp((1.0 - gp) * u + gp * ref) / (gp - 1.0);
}

}  // namespace

GreenResolvent::GreenResolvent(const MarketParams& market, double r,
                               std::function<double(double)> g,
                               std::span<const double> knots, double g_at_zero,
                               double slope_below, double intercept_above,
                               double slope_above, const QuadratureOptions& opts)
    : market_(market),
      roots_(characteristic_roots(market, r)),
      g_(std::move(g)),
      g_at_zero_(g_at_zero),
      slope_below_(slope_below),
      intercept_above_(intercept_above),
      slope_above_(slope_above),
      opts_(opts) {
    if (knots.size() < 2) throw InvalidParamError("GreenResolvent needs >= 2 knots");
    knots_log_.resize(knots.size());
    for (std::size_t i = 0; i < knots.size(); ++i) {
        if (!(knots[i] > 0.0) || (i > 0 && !(knots[i] > knots[i - 1])))
            throw InvalidParamError("GreenResolvent knots must be positive increasing");
        knots_log_[i] = std::log(knots[i]);
    }
    const double gm = roots_.gamma_minus, gp = roots_.gamma_plus;
    scale_ = knots_log_[knots_log_.size() / 2];

    const std::size_t m = knots_log_.size();
    std::vector<double> panel_lo(m - 1), panel_hi(m - 1);
    auto wlo = [&](double u) { return std::exp(-gm * (u - scale_)) * g_(std::exp(u)); };
    auto whi = [&](double u) { return std::exp(-gp * (u - scale_)) * g_(std::exp(u)); };
    for (std::size_t j = 0; j + 1 < m; ++j) {
        panel_lo[j] = adaptive_panel(wlo, knots_log_[j], knots_log_[j + 1], opts_.rel_tol,
                                     0, opts_.max_depth);
        panel_hi[j] = adaptive_panel(whi, knots_log_[j], knots_log_[j + 1], opts_.rel_tol,
                                     0, opts_.max_depth);
    }

    prefix_lo_.resize(m);
    suffix_hi_.resize(m);
    prefix_lo_[0] = tail_below(knots_log_.front(), scale_, gm, g_at_zero_, slope_below_);
    for (std::size_t j = 1; j < m; ++j) prefix_lo_[j] = prefix_lo_[j - 1] + panel_lo[j - 1];
    suffix_hi_[m - 1] =
        tail_above(knots_log_.back(), scale_, gp, intercept_above_, slope_above_);
    for (std::size_t j = m - 1; j-- > 0;) suffix_hi_[j] = suffix_hi_[j + 1] + panel_hi[j];
}

double GreenResolvent::lower_integral(double u) const {
    const double gm = roots_.gamma_minus;
    if (u <= knots_log_.front())
        return tail_below(u, scale_, gm, g_at_zero_, slope_below_);
    auto wlo = [&](double s) { return std::exp(-gm * (s - scale_)) * g_(std::exp(s)); };
    if (u >= knots_log_.back())
        return prefix_lo_.back() +
               tail_below(u, scale_, gm, intercept_above_, slope_above_) -
               tail_below(knots_log_.back(), scale_, gm, intercept_above_, slope_above_);
    const auto it = std::upper_bound(knots_log_.begin(), knots_log_.end(), u);
    const std::size_t j = static_cast<std::size_t>(it - knots_log_.begin()) - 1;
    double base = prefix_lo_[j];
    if (u > knots_log_[j])
        base += adaptive_panel(wlo, knots_log_[j], u, opts_.rel_tol, 0, opts_.max_depth);
    return base;
}

double GreenResolvent::upper_integral(double u) const {
    const double gp = roots_.gamma_plus;
    if (u >= knots_log_.back())
        return tail_above(u, scale_, gp, intercept_above_, slope_above_);
    auto whi = [&](double s) { return std::exp(-gp * (s - scale_)) * g_(std::exp(s)); };
    if (u <= knots_log_.front())
        return suffix_hi_.front() +
               tail_above(u, scale_, gp, g_at_zero_, slope_below_) -
               tail_above(knots_log_.front(), scale_, gp, g_at_zero_, slope_below_);
    const auto it = std::lower_bound(knots_log_.begin(), knots_log_.end(), u);
    const std::size_t j = static_cast<std::size_t>(it - knots_log_.begin());
    double base = suffix_hi_[j];
    if (u < knots_log_[j])
        base += adaptive_panel(whi, u, knots_log_[j], opts_.rel_tol, 0, opts_.max_depth);
    return base;
}

double GreenResolvent::value(double x) const {
    if (!(x > 0.0)) throw InvalidParamError("GreenResolvent::value needs x > 0");
    const double u = std::log(x);
    const double gm = roots_.gamma_minus, gp = roots_.gamma_plus;
    const double c = 2.0 / (market_.sigma * market_.sigma * (gp - gm));
    return c * (std::exp(gm * (u - scale_)) * lower_integral(u) +
                std::exp(gp * (u - scale_)) * upper_integral(u));
}

double GreenResolvent::derivative(double x) const {
    if (!(x > 0.0)) throw InvalidParamError("GreenResolvent::derivative needs x > 0");
    const double u = std::log(x);
    const double gm = roots_.gamma_minus, gp = roots_.gamma_plus;
    const double c = 2.0 / (market_.sigma * market_.sigma * (gp - gm));
    return c / x *
           (gm * std::exp(gm * (u - scale_)) * lower_integral(u) +
            gp * std::exp(gp * (u - scale_)) * upper_integral(u));
}

std::vector<double> GreenResolvent::values_at_knots() const {
    const double gm = roots_.gamma_minus, gp = roots_.gamma_plus;
    const double c = 2.0 / (market_.sigma * market_.sigma * (gp - gm));
    std::vector<double> out(knots_log_.size());
    for (std::size_t j = 0; j < knots_log_.size(); ++j) {
        const double u = knots_log_[j];
        out[j] = c * (std::exp(gm * (u - scale_)) * prefix_lo_[j] +
                      std::exp(gp * (u - scale_)) * suffix_hi_[j]);
    }
    return out;
}

double resolvent_quadrature(const MarketParams& market, double r,
                            const std::function<double(double)>& g, double x,
                            const QuadratureOptions& opts) {
    if (!(x > 0.0)) throw InvalidParamError("resolvent_quadrature needs x > 0");
    const GbmRoots roots = characteristic_roots(market, r);
    const double gm = roots.gamma_minus, gp = roots.gamma_plus;
    const double u0 = std::log(x);

    auto wlo = [&](double s) { return std::exp(-gm * (s - u0)) * g(std::exp(s)); };
    auto whi = [&](double s) { return std::exp(-gp * (s - u0)) * g(std::exp(s)); };

    const double width = 1.0;
    const int max_panels = 4000;

    // downward march: the weight decays like e^{-|gm| depth} toward x = 0
    double lower = 0.0, peak_lo = std::fabs(wlo(u0));
    {
        double hi = u0;
        int flat = 0;
        for (int i = 0;; ++i) {
            if (i == max_panels)
                throw QuadratureFailureError("lower tail did not decay");
            const double lo = hi - width;
            lower += adaptive_panel(wlo, lo, hi, opts.rel_tol, 0, opts.max_depth);
            const double edge = std::fabs(wlo(lo));
            peak_lo = std::max(peak_lo, edge);
            if (edge < opts.tail_cut * peak_lo) {
                if (++flat >= 2) break;
            } else {
                flat = 0;
            }
            hi = lo;
        }
    }

    // upward march with divergence detection
    double upper = 0.0, peak_hi = std::fabs(whi(u0));
    {
        double lo = u0;
        int flat = 0, growing = 0;
        double prev_edge = peak_hi;
        for (int i = 0;; ++i) {
            if (i == max_panels)
                throw NonIntegrableError("upper tail did not decay within range");
            const double hi = lo + width;
            upper += adaptive_panel(whi, lo, hi, opts.rel_tol, 0, opts.max_depth);
            const double edge = std::fabs(whi(hi));
            peak_hi = std::max(peak_hi, edge);
            if (edge > prev_edge * (1.0 + 1e-12)) {
                if (++growing >= 8)
                    throw NonIntegrableError(
                        "payoff grows superlinearly; the resolvent integral diverges");
            } else {
                growing = 0;
            }
            prev_edge = edge;
            if (edge < opts.tail_cut * peak_hi) {
                if (++flat >= 2) break;
            } else {
                flat = 0;
            }
            lo = hi;
        }
    }

    const double c = 2.0 / (market.sigma * market.sigma * (gp - gm));
    return c * (lower + upper);
}

}  // namespace annuity
