#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "errors.hpp"

namespace ensimp {

namespace detail {

// Acklam's rational approximation to the lower half of the standard normal
// quantile function, relative error about 1e-9, for 0 < p <= 0.5.
inline double normal_quantile_lower_approx(double p) {
    constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                            1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                            6.680131188771972e+01,  -1.328068155288572e+01};
    constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                            -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                            3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

} // namespace detail

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Inverse standard normal CDF. A rational approximation is polished with
/// two Halley steps against erfc, giving absolute error far below 1e-9.
/// Exactly antisymmetric: normal_quantile(1 - p) == -normal_quantile(p)
/// whenever 1 - p is representable.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("normal quantile needs 0 < p < 1, got " + std::to_string(p));
    }
    if (p == 0.5) {
        return 0.0;
    }
    const bool upper = p > 0.5;
    const double lower_p = upper ? 1.0 - p : p;
    double x = detail::normal_quantile_lower_approx(lower_p);
    for (int step = 0; step < 2; ++step) {
        const double e = normal_cdf(x) - lower_p;
        const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return upper ? -x : x;
}

} // namespace ensimp
