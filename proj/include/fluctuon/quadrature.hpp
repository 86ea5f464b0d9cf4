// quadrature.hpp — Adaptive Gauss–Kronrod (G7,K15) integration

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fluctuon/errors.hpp"

namespace fluctuon {

struct QuadratureSpec {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    int max_subdivisions = 4000;

    void validate() const {
        if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
            throw std::invalid_argument("QuadratureSpec: tolerances must be > 0");
        if (max_subdivisions < 1)
            throw std::invalid_argument("QuadratureSpec: max_subdivisions must be >= 1");
    }
};

namespace detail {

// 15-point Kronrod nodes (positive half) and weights; the embedded 7-point
// Gauss rule uses the odd-indexed nodes.
inline constexpr double kronrod_x[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691, 0.7415311855993944,
    0.5860872354676911, 0.4058451513773972, 0.2077849550078985, 0.0,
};
inline constexpr double kronrod_w[8] = {
    0.0229353220105292, 0.0630920926299785, 0.1047900103222502, 0.1406532597155259,
    0.1690047266392679, 0.1903505780647854, 0.2044329400752989, 0.2094821410847278,
};
inline constexpr double gauss_w[4] = {
    0.1294849661688697, 0.2797053914892767, 0.3818300505051189, 0.4179591836734694,
};

struct PanelResult {
    double value = 0.0;
    double error = 0.0;
};

template <class F>
PanelResult gauss_kronrod_15(F&& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);

    double fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(mid - half * kronrod_x[i]);
        fv[14 - i] = f(mid + half * kronrod_x[i]);
    }
    fv[7] = f(mid);

    double resk = 0.0, resg = 0.0, resabs = 0.0;
    for (int i = 0; i < 7; ++i) {
        const double pair = fv[i] + fv[14 - i];
        resk += kronrod_w[i] * pair;
        resabs += kronrod_w[i] * (std::abs(fv[i]) + std::abs(fv[14 - i]));
        if (i % 2 == 1) resg += gauss_w[(i - 1) / 2] * pair;
    }
    resk += kronrod_w[7] * fv[7];
    resabs += kronrod_w[7] * std::abs(fv[7]);
    resg += gauss_w[3] * fv[7];

    const double reskh = 0.5 * resk;
    double resasc = kronrod_w[7] * std::abs(fv[7] - reskh);
    for (int i = 0; i < 7; ++i)
        resasc += kronrod_w[i] * (std::abs(fv[i] - reskh) + std::abs(fv[14 - i] - reskh));
    resasc *= half;

    PanelResult r;
    r.value = resk * half;
    double err = std::abs(resk - resg) * half;
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    const double round = 50.0 * std::numeric_limits<double>::epsilon() * resabs * half;
    r.error = std::max(err, round);
    return r;
}

struct Segment {
    double a, b, value, error;
    std::uint64_t id;
    bool operator<(const Segment& o) const {
        if (error != o.error) return error < o.error;
        return id > o.id; // stable order for equal errors
    }
};

} // namespace detail

/// Adaptive integral of f over [a, b] to within max(abs_tol, rel_tol*|I|).
/// Node placement never touches the endpoints, so integrable endpoint
/// singularities are admissible. Throws AccuracyError (carrying the best
/// estimate) if the subdivision budget is exhausted.
template <class F>
double integrate(F&& f, double a, double b, const QuadratureSpec& spec = {}) {
    spec.validate();
    if (!(a <= b)) throw std::invalid_argument("integrate: requires a <= b");
    if (a == b) return 0.0;

    std::priority_queue<detail::Segment> heap;
    auto first = detail::gauss_kronrod_15(f, a, b);
    double total = first.value;
    double total_err = first.error;
    std::uint64_t next_id = 0;
    heap.push({a, b, first.value, first.error, next_id++});

    int subdivisions = 0;
    while (total_err > std::max(spec.abs_tol, spec.rel_tol * std::abs(total))) {
        if (subdivisions >= spec.max_subdivisions)
            throw AccuracyError("integrate: subdivision budget exhausted", total, total_err);
        const detail::Segment worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b)
            throw AccuracyError("integrate: interval width underflow", total, total_err);
        auto left = detail::gauss_kronrod_15(f, worst.a, mid);
        auto right = detail::gauss_kronrod_15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push({worst.a, mid, left.value, left.error, next_id++});
        heap.push({mid, worst.b, right.value, right.error, next_id++});
        ++subdivisions;
    }
    return total;
}

} // namespace fluctuon
