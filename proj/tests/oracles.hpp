// oracles.hpp — Independent numerical oracles used only by tests.
//
// These deliberately avoid the code paths they check: the exponential
// integral is integrated directly from its defining integral, and the phase
// variances come from the raw double time integral of the correlation
// function rather than the closed forms.

#pragma once

#include <cmath>
#include <vector>

#include "fluctuon/noise_model.hpp"
#include "fluctuon/quadrature.hpp"

namespace oracles {

// E_n(z) = int_1^inf e^{-z t} / t^n dt by direct quadrature, written as
// e^{-z} int_0^inf e^{-z s} / (1+s)^n ds so the scale stays O(1/z) and the
// relative accuracy survives large z.
inline double exp_int_quadrature(int n, double z) {
    const double s_max = std::max(2.0, 745.0 / z);
    fluctuon::QuadratureSpec spec;
    spec.abs_tol = 1e-15;
    spec.rel_tol = 1e-12;
    spec.max_subdivisions = 20000;
    const double scaled = fluctuon::integrate(
        [&](double s) { return std::exp(-z * s) / std::pow(1.0 + s, n); }, 0.0, s_max, spec);
    return std::exp(-z) * scaled;
}

// <phi^2>/D^2 = iint_0^t chi(|t'-t''|) dt' dt'' as a genuine nested double
// quadrature, splitting the inner integral at the diagonal singularity.
inline double fid_variance_quadrature(const fluctuon::NoiseBand& band, double t) {
    fluctuon::QuadratureSpec spec;
    spec.abs_tol = 1e-14;
    spec.rel_tol = 1e-11;
    spec.max_subdivisions = 20000;
    auto inner = [&](double t1) {
        auto chi_abs = [&](double t2) { return fluctuon::correlation(band, std::abs(t1 - t2)); };
        return fluctuon::integrate(chi_abs, 0.0, t1, spec) +
               fluctuon::integrate(chi_abs, t1, t, spec);
    };
    return fluctuon::integrate(inner, 0.0, t, spec);
}

// <psi^2>/D^2 = full square minus 4x the cross block
// int_0^{t/2} dt' int_{t/2}^t dt'' chi(|t'-t''|).
inline double echo_variance_quadrature(const fluctuon::NoiseBand& band, double t) {
    fluctuon::QuadratureSpec spec;
    spec.abs_tol = 1e-14;
    spec.rel_tol = 1e-11;
    spec.max_subdivisions = 20000;
    auto cross_inner = [&](double t1) {
        return fluctuon::integrate(
            [&](double t2) { return fluctuon::correlation(band, std::abs(t1 - t2)); }, 0.5 * t, t,
            spec);
    };
    const double cross = fluctuon::integrate(cross_inner, 0.0, 0.5 * t, spec);
    return fid_variance_quadrature(band, t) - 4.0 * cross;
}

inline std::vector<double> log_grid(double lo, double hi, int points) {
    std::vector<double> grid(points);
    for (int i = 0; i < points; ++i)
        grid[i] = lo * std::exp(std::log(hi / lo) * (points == 1 ? 0.0 : double(i) / (points - 1)));
    return grid;
}

inline std::vector<double> linear_grid(double lo, double hi, int points) {
    std::vector<double> grid(points);
    for (int i = 0; i < points; ++i)
        grid[i] = lo + (hi - lo) * (points == 1 ? 0.0 : double(i) / (points - 1));
    return grid;
}

} // namespace oracles
