#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace annuity {

struct InvalidParamError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct IllPosedError : std::domain_error {
    using std::domain_error::domain_error;
};

struct InvalidDistributionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct TreeTooLargeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoRootError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonIntegrableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct QuadratureFailureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ChildrenUnsolvedError : std::logic_error {
    using std::logic_error::logic_error;
};

struct GridExhaustedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnboundedValueError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// n log-spaced points on [lo, hi], endpoints exact.
inline std::vector<double> log_spaced(double lo, double hi, int n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2)
        throw InvalidParamError("log_spaced: need 0 < lo < hi and n >= 2");
    std::vector<double> out(static_cast<std::size_t>(n));
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = std::exp(llo + (lhi - llo) * i / (n - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

inline bool nearly_equal(double a, double b, double rel) {
    return std::fabs(a - b) <= rel * std::max({1.0, std::fabs(a), std::fabs(b)});
}

}  // namespace annuity
