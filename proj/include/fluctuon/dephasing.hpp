// dephasing.hpp — Pure-dephasing decay envelopes
//
// Free-induction and echo envelopes under longitudinal band noise:
//   * Gaussian closure, <e^{i phi}> = exp(-<phi^2>/2), with the closed-form
//     phase variances built from exponential integrals,
//   * the equivalent spectral filter-function form,
//   * the exact single-telegraph generating functionals Phi^f / Phi^e and the
//     two-effective-fluctuator product solution,
//   * the closed four-variable ODE system for <rho_01>, <X_1>, <X_2>, <X_12>.

#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fluctuon/decay_curve.hpp"
#include "fluctuon/noise_model.hpp"
#include "fluctuon/ode.hpp"
#include "fluctuon/quadrature.hpp"
#include "fluctuon/special_functions.hpp"

namespace fluctuon {

struct DephasingProblem {
    NoiseModel model;
    double d_z; // longitudinal sensitivity dOmega/dlambda (rad us^-1 per lambda unit)
    Protocol protocol = Protocol::fid;
};

namespace detail {

// h_n(z) = E_{n+2}(z) - 1/(n+1) + z/n, the combination entering the phase
// variances. Evaluated by series for z < 1: the subtracted constants are the
// m = 0, 1 terms of the E_{n+2} series, so cancellation never occurs and the
// kernel keeps full relative accuracy down to z -> 0.
inline double phase_kernel(int n, double z) {
    if (z == 0.0) return 0.0;
    if (z >= 1.0) return exp_int_en(n + 2, z) - 1.0 / (n + 1) + z / n;
    const int order = n + 2;
    const double psi = digamma_int(order);
    double pow_term = 1.0; // (-z)^m / m!
    double sum = 0.0;
    double log_part = 0.0;
    for (int m = 1; m < 80; ++m) {
        pow_term *= -z / m;
        if (m < 2) continue;
        if (m == order - 1) {
            log_part = pow_term * (-std::log(z) + psi);
            continue;
        }
        const double contrib = pow_term / (m - order + 1);
        sum -= contrib;
        if (m > order && std::abs(contrib) < 1e-18 * (std::abs(sum) + std::abs(log_part))) break;
    }
    return log_part + sum;
}

// Echo analogue: 4 h_n(z/2) - h_n(z) = 4 E_{n+2}(z/2) - E_{n+2}(z) - 3/(n+1) + z/n.
inline double echo_kernel(int n, double z) {
    return 4.0 * phase_kernel(n, 0.5 * z) - phase_kernel(n, z);
}

} // namespace detail

/// Free-induction phase variance <phi_n^2(t)> of one band.
inline double gaussian_fid_variance(const NoiseBand& band, double d_z, double t) {
    if (t < 0.0) throw std::domain_error("gaussian_fid_variance: t must be >= 0");
    if (t == 0.0) return 0.0;
    const double b = 2.0 * band.gamma_lo;
    const double c = 2.0 * band.gamma_hi;
    const double a = normalization_constant(band);
    const double bracket = detail::phase_kernel(band.n, b * t) / std::pow(b, band.n + 1) -
                           detail::phase_kernel(band.n, c * t) / std::pow(c, band.n + 1);
    return std::pow(2.0, band.n) * d_z * d_z * band.sigma * band.sigma * a * bracket;
}

/// Echo phase variance <psi_n^2(t)> of one band (pi-pulse at t/2).
inline double gaussian_echo_variance(const NoiseBand& band, double d_z, double t) {
    if (t < 0.0) throw std::domain_error("gaussian_echo_variance: t must be >= 0");
    if (t == 0.0) return 0.0;
    const double b = 2.0 * band.gamma_lo;
    const double c = 2.0 * band.gamma_hi;
    const double a = normalization_constant(band);
    const double bracket = detail::echo_kernel(band.n, b * t) / std::pow(b, band.n + 1) -
                           detail::echo_kernel(band.n, c * t) / std::pow(c, band.n + 1);
    return std::pow(2.0, band.n) * d_z * d_z * band.sigma * band.sigma * a * bracket;
}

/// Gaussian-closure envelope exp(-(1/2) sum_bands <phi_n^2>) on a grid.
inline DecayCurve gaussian_envelope(const DephasingProblem& problem,
                                    std::span<const double> t_grid) {
    DecayCurve curve;
    curve.method = "gaussian";
    curve.t.assign(t_grid.begin(), t_grid.end());
    curve.value.reserve(t_grid.size());
    for (double t : t_grid) {
        double variance = 0.0;
        for (const auto& band : problem.model.bands)
            variance += problem.protocol == Protocol::fid
                            ? gaussian_fid_variance(band, problem.d_z, t)
                            : gaussian_echo_variance(band, problem.d_z, t);
        curve.value.emplace_back(std::exp(-0.5 * variance), 0.0);
    }
    return curve;
}

namespace detail {

// int_0^inf S(omega) W(omega t) domega, adaptively over the first filter lobe
// and then octave by octave until the contributions die out.
template <class Weight>
double filter_integral(const NoiseModel& model, double t, Weight&& weight,
                       const QuadratureSpec& spec) {
    auto spectrum = [&](double w) {
        double s = 0.0;
        for (const auto& band : model.bands) s += spectral_density(band, w);
        return s;
    };
    auto integrand = [&](double w) { return spectrum(w) * weight(w * t); };

    const double w_lobe = 2.0 * M_PI / t;
    double total = integrate(integrand, 0.0, w_lobe, spec);
    double lo = w_lobe;
    int quiet_octaves = 0;
    for (int k = 0; k < 64 && quiet_octaves < 3; ++k) {
        const double hi = 2.0 * lo;
        const double piece = integrate(integrand, lo, hi, spec);
        total += piece;
        quiet_octaves = std::abs(piece) < std::max(spec.abs_tol, 1e-10 * std::abs(total))
                            ? quiet_octaves + 1
                            : 0;
        lo = hi;
    }
    return total;
}

} // namespace detail

/// Spectral form of the Gaussian envelope:
/// exp(-(t^2/2) D^2 int_{-inf}^{inf} S(omega) W(omega t) domega), taken as
/// 2x the (0, inf) integral, with W(x) = sinc^2(x/2) for free induction and
/// W(x) = sin^2(x/4) sinc^2(x/4) for echo.
inline DecayCurve filter_function_envelope(const DephasingProblem& problem,
                                           std::span<const double> t_grid,
                                           const QuadratureSpec& spec = {}) {
    DecayCurve curve;
    curve.method = "filter-function";
    curve.t.assign(t_grid.begin(), t_grid.end());
    curve.value.reserve(t_grid.size());
    for (double t : t_grid) {
        if (t == 0.0) {
            curve.value.emplace_back(1.0, 0.0);
            continue;
        }
        double integral;
        if (problem.protocol == Protocol::fid) {
            integral = detail::filter_integral(
                problem.model, t,
                [](double x) {
                    const double s = sinc(0.5 * x);
                    return s * s;
                },
                spec);
        } else {
            integral = detail::filter_integral(
                problem.model, t,
                [](double x) {
                    const double s = std::sin(0.25 * x) * sinc(0.25 * x);
                    return s * s;
                },
                spec);
        }
        const double exponent = t * t * problem.d_z * problem.d_z * integral; // (t^2/2) * 2x fold
        curve.value.emplace_back(std::exp(-exponent), 0.0);
    }
    return curve;
}

namespace detail {

// Series of Phi in powers of mu^2 around the critically damped point v = gamma.
inline double phi_fid_series(double gt, double mu2) {
    // sum_k mu^{2k} [ (gt)^{2k}/(2k)! + (gt)^{2k+1}/(2k+1)! ]
    double sum = 0.0;
    double fact = 1.0; // (2k)!
    double p = 1.0;    // (gt)^{2k}
    double m = 1.0;    // mu^{2k}
    for (int k = 0; k <= 2; ++k) {
        sum += m * (p / fact + p * gt / (fact * (2 * k + 1)));
        m *= mu2;
        p *= gt * gt;
        fact *= (2 * k + 1) * (2 * k + 2);
    }
    return std::exp(-gt) * sum;
}

inline double phi_echo_series(double gt, double mu2) {
    // sum_k mu^{2k} [ (gt)^{2k+1}/(2k+1)! + (gt)^{2k+2}/(2k+2)! ] + 1
    double sum = 1.0;
    double fact = 1.0; // (2k+1)!
    double p = gt;     // (gt)^{2k+1}
    double m = 1.0;
    for (int k = 0; k <= 2; ++k) {
        fact *= (2 * k + 1);
        sum += m * (p / fact + p * gt / (fact * (2 * k + 2)));
        m *= mu2;
        p *= gt * gt;
        fact *= (2 * k + 2);
    }
    return std::exp(-gt) * sum;
}

} // namespace detail

/// Exact free-induction generating functional of a single telegraph
/// fluctuator with switching rate gamma and coupling strength v:
/// Phi^f = e^{-gamma t} [cosh(gamma mu t) + sinh(gamma mu t)/mu],
/// mu = sqrt(1 - v^2/gamma^2), evaluated in real arithmetic on both sides of
/// the oscillatory threshold v = gamma.
inline double phi_fid(double gamma, double v, double t) {
    if (!(gamma > 0.0)) throw std::domain_error("phi_fid: gamma must be > 0");
    if (v < 0.0 || t < 0.0) throw std::domain_error("phi_fid: v and t must be >= 0");
    if (v == 0.0) return 1.0;
    const double mu2 = 1.0 - (v / gamma) * (v / gamma);
    const double gt = gamma * t;
    if (std::abs(mu2) < 1e-8) return detail::phi_fid_series(gt, mu2);
    if (mu2 > 0.0) {
        const double mu = std::sqrt(mu2);
        return std::exp(-gt) * (std::cosh(gt * mu) + std::sinh(gt * mu) / mu);
    }
    const double mu = std::sqrt(-mu2);
    return std::exp(-gt) * (std::cos(gt * mu) + std::sin(gt * mu) / mu);
}

/// d Phi^f / dt = -(v^2/gamma) e^{-gamma t} sinh(gamma mu t)/mu.
inline double phi_fid_derivative(double gamma, double v, double t) {
    if (!(gamma > 0.0)) throw std::domain_error("phi_fid_derivative: gamma must be > 0");
    if (v == 0.0) return 0.0;
    const double mu2 = 1.0 - (v / gamma) * (v / gamma);
    const double gt = gamma * t;
    const double pref = -(v * v / gamma) * std::exp(-gt);
    if (std::abs(mu2) < 1e-8) {
        // sinh(x)/mu = gamma t (1 + mu^2 (gt)^2/6 + ...)
        return pref * gt * (1.0 + mu2 * gt * gt / 6.0);
    }
    if (mu2 > 0.0) {
        const double mu = std::sqrt(mu2);
        return pref * std::sinh(gt * mu) / mu;
    }
    const double mu = std::sqrt(-mu2);
    return pref * std::sin(gt * mu) / mu;
}

/// Exact echo generating functional (pi-pulse at t/2):
/// Phi^e = e^{-gamma t}/mu^2 [mu sinh(gamma mu t) + cosh(gamma mu t) + mu^2 - 1].
inline double phi_echo(double gamma, double v, double t) {
    if (!(gamma > 0.0)) throw std::domain_error("phi_echo: gamma must be > 0");
    if (v < 0.0 || t < 0.0) throw std::domain_error("phi_echo: v and t must be >= 0");
    if (v == 0.0) return 1.0;
    const double mu2 = 1.0 - (v / gamma) * (v / gamma);
    const double gt = gamma * t;
    if (std::abs(mu2) < 1e-8) return detail::phi_echo_series(gt, mu2);
    if (mu2 > 0.0) {
        const double mu = std::sqrt(mu2);
        const double sh = std::sinh(gt * mu);
        const double cosh_m1 = 2.0 * std::pow(std::sinh(0.5 * gt * mu), 2);
        return std::exp(-gt) * (mu * sh + cosh_m1 + mu2) / mu2;
    }
    const double mu = std::sqrt(-mu2);
    const double one_m_cos = 2.0 * std::pow(std::sin(0.5 * gt * mu), 2);
    return std::exp(-gt) * (mu * std::sin(gt * mu) + one_m_cos - mu2) / (-mu2);
}

/// Product solution Phi_1 Phi_2 of the two-effective-fluctuator closure.
inline DecayCurve two_fluctuator_envelope(const EffectiveFluctuator& eff1,
                                          const EffectiveFluctuator& eff2, double d_z,
                                          Protocol protocol, std::span<const double> t_grid) {
    const double v1 = std::abs(d_z) * eff1.a_star;
    const double v2 = std::abs(d_z) * eff2.a_star;
    DecayCurve curve;
    curve.method = "two-fluctuator";
    curve.t.assign(t_grid.begin(), t_grid.end());
    curve.value.reserve(t_grid.size());
    for (double t : t_grid) {
        const double p1 = protocol == Protocol::fid ? phi_fid(eff1.gamma_star, v1, t)
                                                    : phi_echo(eff1.gamma_star, v1, t);
        const double p2 = protocol == Protocol::fid ? phi_fid(eff2.gamma_star, v2, t)
                                                    : phi_echo(eff2.gamma_star, v2, t);
        curve.value.emplace_back(p1 * p2, 0.0);
    }
    return curve;
}

/// Reduction of a two-band dephasing problem via effective_fluctuator.
inline DecayCurve two_fluctuator_envelope(const DephasingProblem& problem,
                                          std::span<const double> t_grid) {
    if (problem.model.bands.size() != 2)
        throw std::invalid_argument("two_fluctuator_envelope: model must have exactly two bands");
    return two_fluctuator_envelope(effective_fluctuator(problem.model.bands[0]),
                                   effective_fluctuator(problem.model.bands[1]), problem.d_z,
                                   problem.protocol, t_grid);
}

struct DephasingOdeResult {
    DecayCurve curve; // <rho_01(t)> / rho_01(0)
    std::vector<std::complex<double>> x1, x2, x12;
};

/// Integrates the closed system
///   d<rho_01>/dt = i Omega <rho_01> + i D (<X_1> + <X_2>)
///   d<X_k>/dt    = (-2 gamma_k + i Omega) <X_k> + i D (<X_12> + a_k^2 <rho_01>)
///   d<X_12>/dt   = (-2(gamma_1+gamma_2) + i Omega) <X_12> + i D (a_2^2 <X_1> + a_1^2 <X_2>)
/// from (rho_01(0), 0, 0, 0). Echo curves flip the sign of D at t/2
/// (instantaneous pi-pulse), one integration per grid point.
inline DephasingOdeResult ode_dephasing_envelope(const EffectiveFluctuator& eff1,
                                                 const EffectiveFluctuator& eff2, double d_z,
                                                 const std::function<double(double)>& omega,
                                                 Protocol protocol,
                                                 std::span<const double> t_grid,
                                                 const OdeOptions& opt = {}) {
    const double a1_sq = eff1.a_star * eff1.a_star;
    const double a2_sq = eff2.a_star * eff2.a_star;
    const double g1 = eff1.gamma_star;
    const double g2 = eff2.gamma_star;
    const std::complex<double> i_unit(0.0, 1.0);

    auto rhs_with = [&](double d_eff) {
        return [=, &omega](double t, const ComplexVec<4>& y) {
            const std::complex<double> i_om = i_unit * omega(t);
            const std::complex<double> id = i_unit * d_eff;
            ComplexVec<4> dy;
            dy[0] = i_om * y[0] + id * (y[1] + y[2]);
            dy[1] = (-2.0 * g1 + i_om) * y[1] + id * (y[3] + a1_sq * y[0]);
            dy[2] = (-2.0 * g2 + i_om) * y[2] + id * (y[3] + a2_sq * y[0]);
            dy[3] = (-2.0 * (g1 + g2) + i_om) * y[3] + id * (a2_sq * y[1] + a1_sq * y[2]);
            return dy;
        };
    };

    DephasingOdeResult result;
    result.curve.method = "ode";
    result.curve.t.assign(t_grid.begin(), t_grid.end());
    result.curve.value.resize(t_grid.size());
    result.x1.resize(t_grid.size());
    result.x2.resize(t_grid.size());
    result.x12.resize(t_grid.size());

    ComplexVec<4> y0 = ComplexVec<4>::Zero();
    y0[0] = 1.0;

    auto record = [&](std::size_t idx, const ComplexVec<4>& y) {
        result.curve.value[idx] = y[0];
        result.x1[idx] = y[1];
        result.x2[idx] = y[2];
        result.x12[idx] = y[3];
    };

    if (protocol == Protocol::fid) {
        std::size_t idx = 0;
        integrate_ode<4>(rhs_with(d_z), y0, 0.0, t_grid,
                         [&](double, const ComplexVec<4>& y) { record(idx++, y); }, opt);
        return result;
    }

    for (std::size_t j = 0; j < t_grid.size(); ++j) {
        const double t = t_grid[j];
        if (t == 0.0) {
            record(j, y0);
            continue;
        }
        ComplexVec<4> y = y0;
        const double half[] = {0.5 * t};
        integrate_ode<4>(rhs_with(d_z), y, 0.0, half,
                         [&](double, const ComplexVec<4>& yh) { y = yh; }, opt);
        const double full[] = {t};
        integrate_ode<4>(rhs_with(-d_z), y, 0.5 * t, full,
                         [&](double, const ComplexVec<4>& yf) { record(j, yf); }, opt);
    }
    return result;
}

/// Max residual of the generating-functional equation
/// Phi'' + 2 gamma Phi' + v^2 Phi = 0 under 5-point finite differences.
/// For echo the piecewise solution of an experiment of duration T =
/// t_grid.back() is checked on each half-interval (value continuous at the
/// pulse, slope sign-flipped).
inline double generating_ode_check(double gamma, double v, Protocol protocol,
                                   std::span<const double> t_grid) {
    if (t_grid.size() < 2 || !(t_grid.back() > t_grid.front()))
        throw std::invalid_argument("generating_ode_check: needs an increasing grid");
    const double t_max = t_grid.back();

    // evolution during the experiment: FID is Phi^f everywhere; echo follows
    // Phi^f to T/2, then the same equation with the slope reversed
    std::function<double(double)> value;
    if (protocol == Protocol::fid) {
        value = [=](double s) { return phi_fid(gamma, v, s); };
    } else {
        const double t_half = 0.5 * t_max;
        const double f_half = phi_fid(gamma, v, t_half);
        const double fdot_half = -phi_fid_derivative(gamma, v, t_half);
        value = [=](double s) {
            if (s <= t_half) return phi_fid(gamma, v, s);
            // general solution e^{-gamma u}(A cosh(gamma mu u) + B sinh(gamma mu u)),
            // u measured from the pulse
            const double u = s - t_half;
            const std::complex<double> mu =
                std::sqrt(std::complex<double>(1.0 - (v / gamma) * (v / gamma)));
            const std::complex<double> a = f_half;
            const std::complex<double> b =
                std::abs(mu) < 1e-12 ? std::complex<double>(0.0)
                                     : (fdot_half + gamma * f_half) / (gamma * mu);
            const std::complex<double> val =
                std::exp(-gamma * u) *
                (a * std::cosh(gamma * mu * u) + b * std::sinh(gamma * mu * u));
            return val.real();
        };
    }

    auto residual_on = [&](double lo, double hi) {
        // keep max(gamma, v) * h small so the O(h^4) stencil error stays
        // below the 1e-6 * v^2 residual scale
        const int samples =
            std::max(200, static_cast<int>(std::ceil((hi - lo) * std::max(gamma, v) / 0.01)));
        const double h = (hi - lo) / (samples + 3);
        double worst = 0.0;
        for (int i = 2; i <= samples + 1; ++i) {
            const double s = lo + i * h;
            const double fm2 = value(s - 2 * h), fm1 = value(s - h), f0 = value(s),
                         fp1 = value(s + h), fp2 = value(s + 2 * h);
            const double d1 = (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * h);
            const double d2 = (-fp2 + 16 * fp1 - 30 * f0 + 16 * fm1 - fm2) / (12 * h * h);
            worst = std::max(worst, std::abs(d2 + 2 * gamma * d1 + v * v * f0));
        }
        return worst;
    };

    if (protocol == Protocol::fid) return residual_on(t_grid.front(), t_max);
    return std::max(residual_on(0.0, 0.5 * t_max), residual_on(0.5 * t_max, t_max));
}

} // namespace fluctuon
