// nelder_mead.hpp — Derivative-free simplex minimizer (2..n dimensions)

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "fluctuon/errors.hpp"

namespace fluctuon {

struct NelderMeadOptions {
    double diameter_tol = 1e-8; // stop when the simplex diameter falls below this
    int max_iterations = 1000;
};

struct NelderMeadResult {
    std::vector<double> x;
    double fx = 0.0;
    int iterations = 0;
    std::vector<double> best_history; // best objective after each iteration
};

/// Classic Nelder–Mead with reflection/expansion/contraction/shrink
/// (alpha 1, gamma 2, rho 1/2, sigma 1/2). Deterministic given the initial
/// simplex. Throws NonConvergenceError if the iteration budget runs out.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    std::vector<double> x0, const std::vector<double>& step,
                                    const NelderMeadOptions& opt = {}) {
    const std::size_t dim = x0.size();
    std::vector<std::vector<double>> simplex(dim + 1, x0);
    for (std::size_t i = 0; i < dim; ++i) simplex[i + 1][i] += step[i];
    std::vector<double> fvals(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) fvals[i] = f(simplex[i]);

    auto diameter = [&]() {
        double d = 0.0;
        for (std::size_t i = 0; i <= dim; ++i)
            for (std::size_t j = i + 1; j <= dim; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < dim; ++k)
                    s += (simplex[i][k] - simplex[j][k]) * (simplex[i][k] - simplex[j][k]);
                d = std::max(d, std::sqrt(s));
            }
        return d;
    };

    NelderMeadResult result;
    int iter = 0;
    while (true) {
        std::vector<std::size_t> order(dim + 1);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return fvals[a] < fvals[b]; });
        const std::size_t best = order[0], worst = order[dim], second_worst = order[dim - 1];
        result.best_history.push_back(fvals[best]);

        if (diameter() < opt.diameter_tol) {
            result.x = simplex[best];
            result.fx = fvals[best];
            result.iterations = iter;
            return result;
        }
        if (++iter > opt.max_iterations)
            throw NonConvergenceError("nelder_mead: iteration budget exhausted");

        std::vector<double> centroid(dim, 0.0);
        for (std::size_t i = 0; i <= dim; ++i) {
            if (i == worst) continue;
            for (std::size_t k = 0; k < dim; ++k) centroid[k] += simplex[i][k] / dim;
        }
        auto blend = [&](double coeff) {
            std::vector<double> x(dim);
            for (std::size_t k = 0; k < dim; ++k)
                x[k] = centroid[k] + coeff * (simplex[worst][k] - centroid[k]);
            return x;
        };

        const auto reflected = blend(-1.0);
        const double f_reflected = f(reflected);
        if (f_reflected < fvals[best]) {
            const auto expanded = blend(-2.0);
            const double f_expanded = f(expanded);
            if (f_expanded < f_reflected) {
                simplex[worst] = expanded;
                fvals[worst] = f_expanded;
            } else {
                simplex[worst] = reflected;
                fvals[worst] = f_reflected;
            }
            continue;
        }
        if (f_reflected < fvals[second_worst]) {
            simplex[worst] = reflected;
            fvals[worst] = f_reflected;
            continue;
        }
        const auto contracted = blend(f_reflected < fvals[worst] ? -0.5 : 0.5);
        const double f_contracted = f(contracted);
        if (f_contracted < std::min(f_reflected, fvals[worst])) {
            simplex[worst] = contracted;
            fvals[worst] = f_contracted;
            continue;
        }
        for (std::size_t i = 0; i <= dim; ++i) { // shrink toward the best vertex
            if (i == best) continue;
            for (std::size_t k = 0; k < dim; ++k)
                simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
            fvals[i] = f(simplex[i]);
        }
    }
}

} // namespace fluctuon
