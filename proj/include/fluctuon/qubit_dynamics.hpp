// qubit_dynamics.hpp — Two-level density-matrix evolution under band noise
//
// The fluctuating parameter couples through H(t) = H0 + V xi(t). Provided
// propagators: the two-effective-fluctuator matrix closure (auxiliary
// correlators <X_1>, <X_2>, <X_12>), its single-fluctuator reduction, the
// Gaussian-closure master equation for constant H0, V, and Bloch-Redfield
// rates from the fast-band spectral density.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "fluctuon/noise_model.hpp"
#include "fluctuon/ode.hpp"
#include "fluctuon/quadrature.hpp"

namespace fluctuon {

using Matrix2c = Eigen::Matrix2cd;

struct QubitCoupling {
    double omega;        // level splitting (rad us^-1)
    double d_z;          // longitudinal sensitivity dOmega/dlambda
    double d_perp;       // transverse sensitivity
    char perp_axis = 'x';

    void validate() const {
        if (omega < 0.0) throw std::invalid_argument("QubitCoupling: omega must be >= 0");
        if (!std::isfinite(d_z) || !std::isfinite(d_perp))
            throw std::invalid_argument("QubitCoupling: couplings must be finite");
        if (perp_axis != 'x' && perp_axis != 'y')
            throw std::invalid_argument("QubitCoupling: perp_axis must be 'x' or 'y'");
    }
};

struct FluxQubitParams {
    double epsilon; // bias (rad us^-1)
    double delta;   // tunneling (rad us^-1)

    double level_splitting() const { return std::hypot(epsilon, delta); }
    double splitting_derivative_epsilon() const { return epsilon / level_splitting(); }
};

namespace detail {

inline Matrix2c pauli_z() {
    Matrix2c m;
    m << 1, 0, 0, -1;
    return m;
}
inline Matrix2c pauli_x() {
    Matrix2c m;
    m << 0, 1, 1, 0;
    return m;
}
inline Matrix2c pauli_y() {
    Matrix2c m;
    m << 0, std::complex<double>(0, -1), std::complex<double>(0, 1), 0;
    return m;
}

inline Matrix2c commutator(const Matrix2c& a, const Matrix2c& b) { return a * b - b * a; }

} // namespace detail

/// H0 = -(Omega/2) sigma_z and V = -(D_z/2) sigma_z - (D_perp/2) sigma_perp,
/// so that H(t) = H0 + V xi(t).
inline std::pair<Matrix2c, Matrix2c> build_hamiltonian(const QubitCoupling& coupling) {
    coupling.validate();
    const Matrix2c sz = detail::pauli_z();
    const Matrix2c sperp = coupling.perp_axis == 'x' ? detail::pauli_x() : detail::pauli_y();
    const Matrix2c h0 = -0.5 * coupling.omega * sz;
    const Matrix2c v = -0.5 * coupling.d_z * sz - 0.5 * coupling.d_perp * sperp;
    return {h0, v};
}

using MatrixFn = std::function<Matrix2c(double)>;
using Superoperator = std::function<Matrix2c(const Matrix2c&)>;

/// Optional bath superoperator; defaults to zero. A simple Lindblad stub
/// (amplitude damping + pure dephasing) is provided for extension.
inline Superoperator zero_bath() {
    return [](const Matrix2c&) { return Matrix2c::Zero().eval(); };
}

inline Superoperator lindblad_bath(double relaxation_rate, double dephasing_rate) {
    return [=](const Matrix2c& rho) {
        Matrix2c lower = Matrix2c::Zero();
        lower(1, 0) = 1.0; // |1><0| in the eigenbasis ordering used here
        const Matrix2c sz = detail::pauli_z();
        Matrix2c out = Matrix2c::Zero();
        if (relaxation_rate > 0.0)
            out += relaxation_rate * (lower * rho * lower.adjoint() -
                                      0.5 * (lower.adjoint() * lower * rho +
                                             rho * lower.adjoint() * lower));
        if (dephasing_rate > 0.0)
            out += dephasing_rate * (sz * rho * sz - rho);
        return out.eval();
    };
}

struct DensityTrajectory {
    std::vector<double> t;
    std::vector<Matrix2c> rho;
    std::vector<Matrix2c> x1, x2, x12; // auxiliary correlators where applicable
};

namespace detail {

inline void check_density_matrix(const Matrix2c& rho) {
    if (std::abs(rho.trace().real() - 1.0) > 1e-9 || std::abs(rho.trace().imag()) > 1e-9)
        throw std::invalid_argument("initial density matrix must have unit trace");
    if ((rho - rho.adjoint()).norm() > 1e-9)
        throw std::invalid_argument("initial density matrix must be Hermitian");
}

inline ComplexVec<16> pack4(const Matrix2c& a, const Matrix2c& b, const Matrix2c& c,
                            const Matrix2c& d) {
    ComplexVec<16> y;
    int k = 0;
    for (const auto* m : {&a, &b, &c, &d})
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) y[k++] = (*m)(i, j);
    return y;
}

inline void unpack4(const ComplexVec<16>& y, Matrix2c& a, Matrix2c& b, Matrix2c& c, Matrix2c& d) {
    int k = 0;
    for (auto* m : {&a, &b, &c, &d})
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) (*m)(i, j) = y[k++];
}

} // namespace detail

/// Two-effective-fluctuator closure:
///   d<rho>/dt  = -i[H0,<rho>] + L<rho> - i[V,<X_1>] - i[V,<X_2>]
///   d<X_k>/dt  = -2 gamma_k <X_k> - i[H0,<X_k>] + L<X_k> - i a_k^2 [V,<rho>] - i[V,<X_12>]
///   d<X_12>/dt = -2(gamma_1+gamma_2) <X_12> - i[H0,<X_12>] + L<X_12>
///                - i a_1^2 [V,<X_2>] - i a_2^2 [V,<X_1>]
/// with <X_k>(0) = <X_12>(0) = 0.
inline DensityTrajectory propagate_two_fluctuator(const MatrixFn& h0, const MatrixFn& v,
                                                  const EffectiveFluctuator& eff1,
                                                  const EffectiveFluctuator& eff2,
                                                  const Matrix2c& rho0,
                                                  std::span<const double> t_grid,
                                                  const OdeOptions& opt = {},
                                                  const Superoperator& bath = {}) {
    detail::check_density_matrix(rho0);
    const double a1_sq = eff1.a_star * eff1.a_star;
    const double a2_sq = eff2.a_star * eff2.a_star;
    const double g1 = eff1.gamma_star;
    const double g2 = eff2.gamma_star;
    const std::complex<double> i_unit(0.0, 1.0);

    auto rhs = [&](double t, const ComplexVec<16>& y) {
        Matrix2c rho, x1, x2, x12;
        detail::unpack4(y, rho, x1, x2, x12);
        const Matrix2c ht = h0(t);
        const Matrix2c vt = v(t);
        using detail::commutator;
        Matrix2c drho = -i_unit * (commutator(ht, rho) + commutator(vt, x1) + commutator(vt, x2));
        Matrix2c dx1 = -2.0 * g1 * x1 -
                       i_unit * (commutator(ht, x1) + a1_sq * commutator(vt, rho) +
                                 commutator(vt, x12));
        Matrix2c dx2 = -2.0 * g2 * x2 -
                       i_unit * (commutator(ht, x2) + a2_sq * commutator(vt, rho) +
                                 commutator(vt, x12));
        Matrix2c dx12 = -2.0 * (g1 + g2) * x12 -
                        i_unit * (commutator(ht, x12) + a1_sq * commutator(vt, x2) +
                                  a2_sq * commutator(vt, x1));
        if (bath) {
            drho += bath(rho);
            dx1 += bath(x1);
            dx2 += bath(x2);
            dx12 += bath(x12);
        }
        return detail::pack4(drho, dx1, dx2, dx12);
    };

    DensityTrajectory traj;
    traj.t.assign(t_grid.begin(), t_grid.end());
    integrate_ode<16>(rhs, detail::pack4(rho0, Matrix2c::Zero(), Matrix2c::Zero(), Matrix2c::Zero()),
                      0.0, t_grid,
                      [&](double, const ComplexVec<16>& y) {
                          Matrix2c rho, x1, x2, x12;
                          detail::unpack4(y, rho, x1, x2, x12);
                          traj.rho.push_back(rho);
                          traj.x1.push_back(x1);
                          traj.x2.push_back(x2);
                          traj.x12.push_back(x12);
                      },
                      opt);
    return traj;
}

/// Single-effective-fluctuator reduction (two coupled matrix equations).
inline DensityTrajectory propagate_single_effective(const MatrixFn& h0, const MatrixFn& v,
                                                    const EffectiveFluctuator& eff,
                                                    const Matrix2c& rho0,
                                                    std::span<const double> t_grid,
                                                    const OdeOptions& opt = {},
                                                    const Superoperator& bath = {}) {
    detail::check_density_matrix(rho0);
    const double a_sq = eff.a_star * eff.a_star;
    const double g = eff.gamma_star;
    const std::complex<double> i_unit(0.0, 1.0);

    auto rhs = [&](double t, const ComplexVec<16>& y) {
        Matrix2c rho, x, unused1, unused2;
        detail::unpack4(y, rho, x, unused1, unused2);
        const Matrix2c ht = h0(t);
        const Matrix2c vt = v(t);
        using detail::commutator;
        Matrix2c drho = -i_unit * (commutator(ht, rho) + commutator(vt, x));
        Matrix2c dx = -2.0 * g * x - i_unit * (commutator(ht, x) + a_sq * commutator(vt, rho));
        if (bath) {
            drho += bath(rho);
            dx += bath(x);
        }
        return detail::pack4(drho, dx, Matrix2c::Zero(), Matrix2c::Zero());
    };

    DensityTrajectory traj;
    traj.t.assign(t_grid.begin(), t_grid.end());
    integrate_ode<16>(rhs, detail::pack4(rho0, Matrix2c::Zero(), Matrix2c::Zero(), Matrix2c::Zero()),
                      0.0, t_grid,
                      [&](double, const ComplexVec<16>& y) {
                          Matrix2c rho, x, u1, u2;
                          detail::unpack4(y, rho, x, u1, u2);
                          traj.rho.push_back(rho);
                          traj.x1.push_back(x);
                      },
                      opt);
    return traj;
}

/// Gaussian-closure master equation for time-independent H0 and V:
///   d<rho>/dt = -i[H0,<rho>] + L<rho> - [V,[K(t),<rho>]],
///   K(t) = int_0^t chi(s) e^{-i H0 s} V e^{i H0 s} ds,
/// with K integrated alongside rho (dK/dt = chi(t) e^{-iH0 t} V e^{iH0 t}).
inline DensityTrajectory propagate_gaussian(const Matrix2c& h0, const Matrix2c& v,
                                            const NoiseModel& model, const Matrix2c& rho0,
                                            std::span<const double> t_grid,
                                            const OdeOptions& opt = {},
                                            const Superoperator& bath = {}) {
    detail::check_density_matrix(rho0);
    const std::complex<double> i_unit(0.0, 1.0);

    // U(t) = e^{i H0 t} through the eigendecomposition of the constant H0
    Eigen::SelfAdjointEigenSolver<Matrix2c> es(h0);
    const Matrix2c p = es.eigenvectors();
    const Eigen::Vector2d lambda = es.eigenvalues();
    auto v_rotated = [&](double s) {
        // e^{-i H0 s} V e^{i H0 s}
        Eigen::Vector2cd phase;
        phase << std::exp(std::complex<double>(0.0, -lambda[0] * s)),
            std::exp(std::complex<double>(0.0, -lambda[1] * s));
        const Matrix2c left = phase.asDiagonal();
        const Matrix2c right = phase.conjugate().asDiagonal();
        return (p * left * p.adjoint() * v * p * right * p.adjoint()).eval();
    };

    auto rhs = [&](double t, const ComplexVec<16>& y) {
        Matrix2c rho, kmat, u1, u2;
        detail::unpack4(y, rho, kmat, u1, u2);
        using detail::commutator;
        Matrix2c drho = -i_unit * commutator(h0, rho) - commutator(v, commutator(kmat, rho));
        if (bath) drho += bath(rho);
        const Matrix2c dk = correlation_total(model, t) * v_rotated(t);
        return detail::pack4(drho, dk, Matrix2c::Zero(), Matrix2c::Zero());
    };

    DensityTrajectory traj;
    traj.t.assign(t_grid.begin(), t_grid.end());
    integrate_ode<16>(rhs, detail::pack4(rho0, Matrix2c::Zero(), Matrix2c::Zero(), Matrix2c::Zero()),
                      0.0, t_grid,
                      [&](double, const ComplexVec<16>& y) {
                          Matrix2c rho, kmat, u1, u2;
                          detail::unpack4(y, rho, kmat, u1, u2);
                          traj.rho.push_back(rho);
                      },
                      opt);
    return traj;
}

struct BlochRedfieldRates {
    double gamma_1;   // longitudinal relaxation (us^-1)
    double gamma_phi; // pure dephasing (us^-1)
    double gamma_2;   // transverse, Gamma_1/2 + Gamma_phi
    double tau_2;     // fast-fluctuator correlation time used for validity
    bool valid;       // Gamma_1 tau_2 < 0.1 and Gamma_2 tau_2 < 0.1
};

/// Closed-form rates from the fast band (n = 2), Gamma_1 = pi D_perp^2 S_2(Omega),
/// Gamma_phi = pi D_z^2 S_2(0) = D_z^2 (sigma^2/4 gamma_c)(1 + gamma_c/gamma_0).
inline BlochRedfieldRates br_rates(const QubitCoupling& coupling, const NoiseBand& fast_band) {
    coupling.validate();
    if (fast_band.n != 2) throw std::invalid_argument("br_rates: fast band must have n = 2");
    const double gc = fast_band.gamma_lo;
    const double g0 = fast_band.gamma_hi;
    const double sigma_sq = fast_band.sigma * fast_band.sigma;

    BlochRedfieldRates rates{};
    rates.gamma_phi = coupling.d_z * coupling.d_z * sigma_sq / (4.0 * gc) * (1.0 + gc / g0);
    rates.gamma_1 = coupling.d_perp == 0.0
                        ? 0.0
                        : M_PI * coupling.d_perp * coupling.d_perp *
                              spectral_density(fast_band, coupling.omega);
    rates.gamma_2 = 0.5 * rates.gamma_1 + rates.gamma_phi;
    rates.tau_2 = 1.0 / (2.0 * gc) * (1.0 + gc / g0);
    rates.valid = rates.gamma_1 * rates.tau_2 < 0.1 && rates.gamma_2 * rates.tau_2 < 0.1;
    return rates;
}

/// Rate integrals over P_2(gamma), with the Lorentzian kernel normalized as
/// 2 sigma^2 gamma / (4 gamma^2 + Omega^2) so the results match
/// Gamma_1 = pi D_perp^2 S_2(Omega) exactly.
inline std::pair<double, double> br_partial_rates_quadrature(const QubitCoupling& coupling,
                                                             const NoiseBand& fast_band,
                                                             const QuadratureSpec& spec = {}) {
    coupling.validate();
    if (fast_band.n != 2)
        throw std::invalid_argument("br_partial_rates_quadrature: fast band must have n = 2");
    const double a2 = normalization_constant(fast_band);
    const double sigma_sq = fast_band.sigma * fast_band.sigma;
    const double omega = coupling.omega;

    const double gamma_1 =
        coupling.d_perp * coupling.d_perp * sigma_sq * a2 *
        integrate(
            [&](double g) { return 2.0 * g / ((4.0 * g * g + omega * omega) * g * g); },
            fast_band.gamma_lo, fast_band.gamma_hi, spec);
    const double gamma_phi =
        coupling.d_z * coupling.d_z * sigma_sq * a2 *
        integrate([&](double g) { return 1.0 / (2.0 * g * g * g); }, fast_band.gamma_lo,
                  fast_band.gamma_hi, spec);
    return {gamma_1, gamma_phi};
}

/// CSV export: t, re/im of rho_00, rho_01, rho_11, purity.
inline void write_trajectory_csv(std::ostream& os, const DensityTrajectory& traj,
                                 const std::vector<std::string>& extra_header = {}) {
    os.precision(17);
    for (const auto& line : extra_header) os << "# " << line << '\n';
    os << "t,rho00_re,rho00_im,rho01_re,rho01_im,rho11_re,rho11_im,purity\n";
    for (std::size_t i = 0; i < traj.t.size(); ++i) {
        const Matrix2c& rho = traj.rho[i];
        const double purity = (rho * rho).trace().real();
        os << traj.t[i] << ',' << rho(0, 0).real() << ',' << rho(0, 0).imag() << ','
           << rho(0, 1).real() << ',' << rho(0, 1).imag() << ',' << rho(1, 1).real() << ','
           << rho(1, 1).imag() << ',' << purity << '\n';
    }
}

} // namespace fluctuon
