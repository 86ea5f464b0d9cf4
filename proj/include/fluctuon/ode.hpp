// ode.hpp — Adaptive Dormand–Prince 5(4) integration for complex linear systems

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <stdexcept>

#include "fluctuon/errors.hpp"

namespace fluctuon {

template <int N>
using ComplexVec = Eigen::Matrix<std::complex<double>, N, 1>;

struct OdeOptions {
    // per-step tolerances one decade below the 1e-9 contracts on recorded
    // states, leaving room for global accumulation
    double rel_tol = 1e-10;
    double abs_tol = 1e-13;
    double h_max = std::numeric_limits<double>::infinity();
    long max_steps = 2'000'000;
};

namespace detail {

// Dormand–Prince 5(4) tableau
inline constexpr double dp_c[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
inline constexpr double dp_a[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
inline constexpr double dp_b5[7] = {35.0 / 384,      0.0,  500.0 / 1113, 125.0 / 192,
                                    -2187.0 / 6784, 11.0 / 84, 0.0};
inline constexpr double dp_b4[7] = {5179.0 / 57600,  0.0,       7571.0 / 16695, 393.0 / 640,
                                    -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

} // namespace detail

/// Integrates dy/dt = rhs(t, y) from t0 through the strictly increasing
/// output times, invoking observer(t, y) at t0 (if it is the first output)
/// and at every output time. Steps are clipped to land exactly on output
/// times, so no interpolation error enters the recorded states.
template <int N, class Rhs, class Observer>
void integrate_ode(Rhs&& rhs, ComplexVec<N> y, double t0, std::span<const double> outputs,
                   Observer&& observer, const OdeOptions& opt = {}) {
    using Vec = ComplexVec<N>;
    if (outputs.empty()) return;
    for (std::size_t i = 0; i + 1 < outputs.size(); ++i)
        if (!(outputs[i] < outputs[i + 1]))
            throw std::invalid_argument("integrate_ode: output times must be strictly increasing");
    if (outputs.front() < t0)
        throw std::invalid_argument("integrate_ode: outputs must start at or after t0");

    double t = t0;
    std::size_t next_out = 0;
    if (outputs[0] == t0) {
        observer(t0, y);
        next_out = 1;
        if (next_out == outputs.size()) return;
    }

    const double t_end = outputs.back();
    double h_natural = std::min({opt.h_max, (t_end - t) / 10.0, 0.1});
    if (!(h_natural > 0.0)) h_natural = 1e-6;

    Vec k[7];
    k[0] = rhs(t, y);
    long steps = 0;
    while (t < t_end) {
        if (++steps > opt.max_steps)
            throw AccuracyError("integrate_ode: step budget exhausted", t, h_natural);
        double h = h_natural;
        bool hit_output = false;
        if (t + h >= outputs[next_out]) {
            h = outputs[next_out] - t;
            hit_output = true;
        }

        for (int s = 1; s < 7; ++s) {
            Vec ys = y;
            for (int j = 0; j < s; ++j)
                if (detail::dp_a[s][j] != 0.0) ys += (h * detail::dp_a[s][j]) * k[j];
            k[s] = rhs(t + detail::dp_c[s] * h, ys);
        }
        Vec y5 = y;
        Vec y4 = y;
        for (int s = 0; s < 7; ++s) {
            if (detail::dp_b5[s] != 0.0) y5 += (h * detail::dp_b5[s]) * k[s];
            if (detail::dp_b4[s] != 0.0) y4 += (h * detail::dp_b4[s]) * k[s];
        }

        double err = 0.0;
        for (int i = 0; i < N; ++i) {
            const double scale =
                opt.abs_tol + opt.rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
            err = std::max(err, std::abs(y5[i] - y4[i]) / scale);
        }

        const double safety = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        if (err <= 1.0) {
            t = hit_output ? outputs[next_out] : t + h;
            y = y5;
            k[0] = k[6]; // FSAL
            if (hit_output) {
                observer(t, y);
                if (++next_out == outputs.size()) return;
            }
            if (hit_output)
                h_natural = std::min(opt.h_max, std::max(h_natural, h * std::clamp(safety, 0.2, 5.0)));
            else
                h_natural = std::min(opt.h_max, h * std::clamp(safety, 0.2, 5.0));
        } else {
            h_natural = h * std::clamp(safety, 0.2, 0.9);
            if (!(h_natural > std::abs(t) * 1e-15 + 1e-300))
                throw AccuracyError("integrate_ode: step size underflow", t, h_natural);
        }
    }
}

} // namespace fluctuon
