// special_functions.hpp — Exponential integrals E_n(z) and sinc

#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fluctuon {

namespace detail {

inline constexpr double euler_gamma = 0.57721566490153286060651209008240243;

// psi(n) = -gamma + sum_{k=1}^{n-1} 1/k
inline double digamma_int(int n) {
    double s = -euler_gamma;
    for (int k = 1; k < n; ++k) s += 1.0 / k;
    return s;
}

// E_1(z) for 0 < z < 1 by the ascending series
// E_1(z) = -gamma - ln z - sum_{k>=1} (-z)^k / (k k!)
inline double e1_series(double z) {
    double sum = -euler_gamma - std::log(z);
    double term = 1.0; // (-z)^k / k!
    for (int k = 1; k < 60; ++k) {
        term *= -z / k;
        const double contrib = term / k;
        sum -= contrib;
        if (std::abs(contrib) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
}

// E_n(z) for n >= 2, 0 < z < 1 by the ascending series
// E_n(z) = (-z)^{n-1}/(n-1)! [-ln z + psi(n)] - sum_{m != n-1} (-z)^m / ((m-n+1) m!)
inline double en_series(int n, double z) {
    const double psi = digamma_int(n);
    double pow_term = 1.0; // (-z)^m / m!
    double sum = 0.0;
    double log_part = 0.0;
    for (int m = 0; m < 80; ++m) {
        if (m > 0) pow_term *= -z / m;
        if (m == n - 1) {
            log_part = pow_term * (-std::log(z) + psi);
            continue;
        }
        const double contrib = pow_term / (m - n + 1);
        sum -= contrib;
        if (m > n && std::abs(contrib) < 1e-18 * (std::abs(sum) + std::abs(log_part))) break;
    }
    return log_part + sum;
}

// E_n(z) for z >= 1 by the modified Lentz continued fraction
inline double en_continued_fraction(int n, double z) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    double b = z + n;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 200; ++i) {
        const double a = -static_cast<double>(i) * (n - 1 + i);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        const double del = c * d;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h * std::exp(-z);
}

} // namespace detail

/// Exponential integral E_n(z) = int_1^inf exp(-z t)/t^n dt for integer n >= 1.
/// Returns 0 for z > 700 (below double-precision range).
inline double exp_int_en(int n, double z) {
    if (n < 1) throw std::invalid_argument("exp_int_en: order n must be >= 1");
    if (z < 0.0 || std::isnan(z)) throw std::domain_error("exp_int_en: z must be nonnegative");
    if (z == 0.0) {
        if (n == 1) throw std::domain_error("exp_int_en: E_1 diverges at z = 0");
        return 1.0 / (n - 1);
    }
    if (z > 700.0) return 0.0;
    if (z < 1.0) return n == 1 ? detail::e1_series(z) : detail::en_series(n, z);
    return detail::en_continued_fraction(n, z);
}

/// sin(x)/x with the removable singularity at 0.
inline double sinc(double x) {
    const double ax = std::abs(x);
    if (ax < 1e-4) {
        const double x2 = x * x;
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
    }
    return std::sin(x) / x;
}

} // namespace fluctuon
