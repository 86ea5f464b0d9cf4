// noise_model.hpp — Fluctuator-band distributions: correlation functions,
// spectral densities, correlation times, and effective-fluctuator reduction.
//
// Canonical units: time in us, switching rates in us^-1, angular frequency
// in rad us^-1. A band with exponent n holds fluctuators whose switching
// rates are distributed as P_n(gamma) = A_n / gamma^n on [gamma_lo, gamma_hi];
// n = 1 produces a 1/f spectrum between the cutoffs, n = 2 a Lorentzian-tail
// spectrum.

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fluctuon/quadrature.hpp"
#include "fluctuon/special_functions.hpp"

namespace fluctuon {

struct NoiseBand {
    int n;           // spectral class, S ~ 1/omega^n inside the band
    double sigma;    // amplitude in units of the fluctuating parameter
    double gamma_lo; // lower switching rate (us^-1)
    double gamma_hi; // upper switching rate (us^-1)

    NoiseBand(int n_, double sigma_, double gamma_lo_, double gamma_hi_)
        : n(n_), sigma(sigma_), gamma_lo(gamma_lo_), gamma_hi(gamma_hi_) {
        if (n < 1) throw std::invalid_argument("NoiseBand: n must be >= 1");
        if (!(sigma > 0.0)) throw std::invalid_argument("NoiseBand: sigma must be > 0");
        if (!(gamma_lo > 0.0) || !(gamma_lo < gamma_hi))
            throw std::invalid_argument("NoiseBand: requires 0 < gamma_lo < gamma_hi");
    }
};

struct NoiseModel {
    std::vector<NoiseBand> bands;

    explicit NoiseModel(std::vector<NoiseBand> bands_) : bands(std::move(bands_)) {
        if (bands.empty()) throw std::invalid_argument("NoiseModel: needs at least one band");
    }

    /// Factory enforcing the rate-window continuity condition between
    /// consecutive bands (band k+1 starts where band k ends).
    static NoiseModel contiguous(std::vector<NoiseBand> bands_) {
        for (std::size_t i = 1; i < bands_.size(); ++i) {
            if (bands_[i].gamma_lo != bands_[i - 1].gamma_hi)
                throw std::invalid_argument(
                    "NoiseModel::contiguous: band windows must share endpoints");
        }
        return NoiseModel(std::move(bands_));
    }
};

/// Single random-telegraph surrogate for a band: amplitude a* with
/// a*^2 = chi(0) and rate gamma* = -(1/2) d ln chi / d tau at tau = 0.
struct EffectiveFluctuator {
    double a_star;
    double gamma_star;
};

/// Normalization constant A_n of P_n(gamma) = A_n / gamma^n on the band window.
inline double normalization_constant(const NoiseBand& band) {
    if (band.n == 1) return 1.0 / std::log(band.gamma_hi / band.gamma_lo);
    const double ratio = band.gamma_lo / band.gamma_hi;
    return (band.n - 1) * std::pow(band.gamma_lo, band.n - 1) /
           (1.0 - std::pow(ratio, band.n - 1));
}

/// chi_n(tau) = sigma^2 A_n (E_n(2 gamma_lo tau)/gamma_lo^{n-1}
///                          - E_n(2 gamma_hi tau)/gamma_hi^{n-1});
/// chi_n(0) = sigma^2 returned analytically.
inline double correlation(const NoiseBand& band, double tau) {
    if (tau < 0.0) throw std::domain_error("correlation: tau must be >= 0");
    if (tau < 1e-14) return band.sigma * band.sigma;
    const double a = normalization_constant(band);
    const double lo = exp_int_en(band.n, 2.0 * band.gamma_lo * tau) /
                      std::pow(band.gamma_lo, band.n - 1);
    const double hi = exp_int_en(band.n, 2.0 * band.gamma_hi * tau) /
                      std::pow(band.gamma_hi, band.n - 1);
    return band.sigma * band.sigma * a * (lo - hi);
}

inline double correlation_total(const NoiseModel& model, double tau) {
    double sum = 0.0;
    for (const auto& band : model.bands) sum += correlation(band, tau);
    return sum;
}

namespace detail {

// J_n(omega) = int_b^c x^{1-n} / (x^2 + omega^2) dx with b = 2 gamma_lo,
// c = 2 gamma_hi. Downward-in-order recurrence for omega not small against b;
// series in omega^2 otherwise (the recurrence cancels catastrophically there).
inline double spectral_j(int n, double b, double c, double omega) {
    if (omega <= 0.5 * b) {
        // J_n = sum_{j>=0} (-omega^2)^j (b^{-n-2j} - c^{-n-2j}) / (n + 2j),
        // written with ratio powers so nothing overflows for small b
        const double b_n = std::pow(b, -n);
        const double c_n = std::pow(c, -n);
        const double rb = -(omega / b) * (omega / b);
        const double rc = -(omega / c) * (omega / c);
        double pb = 1.0, pc = 1.0, sum = 0.0;
        for (int j = 0; j < 200; ++j) {
            const double term = (b_n * pb - c_n * pc) / (n + 2 * j);
            sum += term;
            if (std::abs(term) < 1e-17 * std::abs(sum)) break;
            pb *= rb;
            pc *= rc;
        }
        return sum;
    }
    const double w2 = omega * omega;
    const double j1 = (std::atan(c / omega) - std::atan(b / omega)) / omega;
    if (n == 1) return j1;
    const double j2 = 0.5 / w2 * std::log((c * c * (b * b + w2)) / (b * b * (c * c + w2)));
    if (n == 2) return j2;
    double jm2 = j1, jm1 = j2; // J_{k-2}, J_{k-1} as k advances
    double jk = 0.0;
    for (int k = 3; k <= n; ++k) {
        jk = ((std::pow(c, 2 - k) - std::pow(b, 2 - k)) / (2 - k) - jm2) / w2;
        jm2 = jm1;
        jm1 = jk;
    }
    return jk;
}

} // namespace detail

/// Closed-form spectral density S_n(omega) of one band,
/// S_n(omega) = (1/pi) int_0^inf chi_n(tau) cos(omega tau) d tau.
inline double spectral_density(const NoiseBand& band, double omega) {
    if (omega < 0.0) throw std::domain_error("spectral_density: omega must be >= 0");
    const double a = normalization_constant(band);
    const double b = 2.0 * band.gamma_lo;
    const double c = 2.0 * band.gamma_hi;
    const double pref = band.sigma * band.sigma * a * std::pow(2.0, band.n - 1) / M_PI;
    return pref * detail::spectral_j(band.n, b, c, omega);
}

/// Cosine-transform oracle for spectral_density: adaptive quadrature of
/// chi_n(tau) cos(omega tau) on [0, T] plus the exact tail obtained from the
/// rate-distribution representation,
///   int_T^inf e^{-2 gamma tau} cos(omega tau) d tau
///     = e^{-2 gamma T} (2 gamma cos(omega T) - omega sin(omega T)) / (4 gamma^2 + omega^2).
inline double spectral_density_quadrature(const NoiseBand& band, double omega,
                                          const QuadratureSpec& spec = {}) {
    if (omega < 0.0)
        throw std::domain_error("spectral_density_quadrature: omega must be >= 0");
    const double t_split = 8.0 / band.gamma_hi;
    const double sigma2 = band.sigma * band.sigma;

    // Oscillatory head: pre-split at roughly one panel per half period.
    const int panels =
        std::min(20000, std::max(1, static_cast<int>(std::ceil(omega * t_split / M_PI))));
    QuadratureSpec head_spec = spec;
    head_spec.abs_tol = spec.abs_tol / panels;
    double head = 0.0;
    for (int k = 0; k < panels; ++k) {
        const double a = t_split * k / panels;
        const double b = t_split * (k + 1) / panels;
        head += integrate([&](double tau) { return correlation(band, tau) * std::cos(omega * tau); },
                          a, b, head_spec);
    }

    const double a_n = normalization_constant(band);
    const double cos_wt = std::cos(omega * t_split);
    const double sin_wt = std::sin(omega * t_split);
    const double tail =
        sigma2 * a_n *
        integrate(
            [&](double g) {
                return std::pow(g, -band.n) * std::exp(-2.0 * g * t_split) *
                       (2.0 * g * cos_wt - omega * sin_wt) / (4.0 * g * g + omega * omega);
            },
            band.gamma_lo, band.gamma_hi, spec);

    return (head + tail) / M_PI;
}

/// S_2(omega) / S_1(omega) for a model with exactly one n=1 and one n=2 band.
inline double spectral_ratio(const NoiseModel& model, double omega) {
    const NoiseBand* slow = nullptr;
    const NoiseBand* fast = nullptr;
    for (const auto& band : model.bands) {
        if (band.n == 1 && !slow) slow = &band;
        else if (band.n == 2 && !fast) fast = &band;
        else throw std::invalid_argument("spectral_ratio: model must have exactly one n=1 and one n=2 band");
    }
    if (!slow || !fast)
        throw std::invalid_argument("spectral_ratio: model must have exactly one n=1 and one n=2 band");
    return spectral_density(*fast, omega) / spectral_density(*slow, omega);
}

/// Correlation time tau_n = (1/chi_n(0)) int_0^inf chi_n(tau) d tau.
inline double correlation_time(const NoiseBand& band) {
    const double b = 2.0 * band.gamma_lo;
    const double c = 2.0 * band.gamma_hi;
    if (band.n == 1) return (1.0 - b / c) / (b * std::log(c / b));
    const int n = band.n;
    const double r = b / c;
    return (n - 1) * (1.0 - std::pow(r, n)) / (n * b * (1.0 - std::pow(r, n - 1)));
}

/// Effective single-fluctuator reduction of a band.
inline EffectiveFluctuator effective_fluctuator(const NoiseBand& band) {
    double gamma_star;
    if (band.n == 1) {
        gamma_star = (band.gamma_hi - band.gamma_lo) / std::log(band.gamma_hi / band.gamma_lo);
    } else if (band.n == 2) {
        gamma_star = band.gamma_lo * std::log(band.gamma_hi / band.gamma_lo) /
                     (1.0 - band.gamma_lo / band.gamma_hi);
    } else {
        // -(1/2) d chi/d tau|_0 / chi(0) from d/dz E_n = -E_{n-1} and E_{n-1}(0) = 1/(n-2)
        const double a = normalization_constant(band);
        gamma_star = a *
                     (std::pow(band.gamma_lo, 2 - band.n) - std::pow(band.gamma_hi, 2 - band.n)) /
                     (band.n - 2);
    }
    return {band.sigma, gamma_star};
}

} // namespace fluctuon
