#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "annuity/common.hpp"

namespace annuity {

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Butland slopes with
/// limited endpoints). Evaluation outside the knot range extrapolates with the
/// boundary cubic; callers needing linear tails handle those themselves.
class MonotoneCubic {
public:
    MonotoneCubic() = default;
    MonotoneCubic(std::span<const double> x, std::span<const double> y);

    double eval(double x) const;
    double derivative(double x) const;
    bool empty() const { return x_.empty(); }
    double x_front() const { return x_.front(); }
    double x_back() const { return x_.back(); }

private:
    std::size_t cell(double x) const;
    std::vector<double> x_, y_, d_;
};

inline MonotoneCubic::MonotoneCubic(std::span<const double> x, std::span<const double> y)
    : x_(x.begin(), x.end()), y_(y.begin(), y.end()) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n)
        throw InvalidParamError("MonotoneCubic: need matching arrays, size >= 2");
    d_.resize(n);
    std::vector<double> h(n - 1), s(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x_[i + 1] - x_[i];
        if (!(h[i] > 0)) throw InvalidParamError("MonotoneCubic: x must increase");
        s[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (s[i - 1] * s[i] <= 0.0) {
            d_[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            d_[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
        }
    }
    auto endpoint = [](double h0, double h1, double s0, double s1) {
        double d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
        if (d * s0 <= 0.0) return 0.0;
        if (s0 * s1 <= 0.0 && std::fabs(d) > 3.0 * std::fabs(s0)) return 3.0 * s0;
        return d;
    };
    if (n == 2) {
        d_[0] = d_[1] = s[0];
    } else {
        d_[0] = endpoint(h[0], h[1], s[0], s[1]);
        d_[n - 1] = endpoint(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
    }
}

inline std::size_t MonotoneCubic::cell(double x) const {
    if (x <= x_.front()) return 0;
    if (x >= x_.back()) return x_.size() - 2;
    std::size_t lo = 0, hi = x_.size() - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        (x_[mid] <= x ? lo : hi) = mid;
    }
    return lo;
}

inline double MonotoneCubic::eval(double x) const {
    const std::size_t i = cell(x);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * y_[i] + h * h10 * d_[i] + h01 * y_[i + 1] + h * h11 * d_[i + 1];
}

inline double MonotoneCubic::derivative(double x) const {
    const std::size_t i = cell(x);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t;
    const double g00 = (6 * t2 - 6 * t) / h, g10 = 3 * t2 - 4 * t + 1;
    const double g01 = (-6 * t2 + 6 * t) / h, g11 = 3 * t2 - 2 * t;
    return g00 * y_[i] + g10 * d_[i] + g01 * y_[i + 1] + g11 * d_[i + 1];
}

}  // namespace annuity
