// rtp_sim.hpp — Monte-Carlo oracle for random-telegraph noise
//
// Samples discrete telegraph trajectories, assembles ensemble realizations of
// xi_N(t) = sum_i zeta_i(t), and estimates correlations, moments, and decay
// envelopes empirically. Phase integrals are evaluated exactly on the
// piecewise-constant paths; there is no time-step error anywhere.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "fluctuon/decay_curve.hpp"
#include "fluctuon/noise_model.hpp"
#include "fluctuon/rng.hpp"

namespace fluctuon {

struct Fluctuator {
    double amplitude; // a_i, in units of the fluctuating parameter
    double rate;      // gamma_i (us^-1)
};

/// One telegraph path: value(t) = initial_sign * (-1)^{#flips <= t}, scaled
/// by the owning fluctuator's amplitude.
struct Trajectory {
    int initial_sign = 1;
    std::vector<double> flip_times; // strictly increasing, within [0, horizon]
    double horizon = 0.0;

    int sign_at(double t) const {
        const auto it = std::upper_bound(flip_times.begin(), flip_times.end(), t);
        const auto flips = static_cast<std::size_t>(it - flip_times.begin());
        return (flips % 2 == 0) ? initial_sign : -initial_sign;
    }
};

/// Band members re-drawn from P_n(gamma) independently for every realization,
/// so the rate-draw scatter is averaged over (and enters the standard errors)
/// and the ensemble expectation is exactly the band correlation chi_n.
struct BandSource {
    NoiseBand band;
    int count;
};

struct EnsembleSpec {
    std::vector<Fluctuator> fluctuators;    // fixed members
    std::vector<BandSource> resampled_bands; // re-drawn per realization
    int trajectories = 1;                   // ensemble realizations per estimate
    std::uint64_t seed = 0;
    double horizon = 0.0; // us

    void validate() const {
        if (fluctuators.empty() && resampled_bands.empty())
            throw std::invalid_argument("EnsembleSpec: needs at least one fluctuator source");
        for (const auto& f : fluctuators)
            if (!(f.amplitude > 0.0) || !(f.rate > 0.0))
                throw std::invalid_argument("EnsembleSpec: fluctuator parameters must be > 0");
        for (const auto& src : resampled_bands)
            if (src.count < 1)
                throw std::invalid_argument("EnsembleSpec: band source count must be >= 1");
        if (trajectories < 1)
            throw std::invalid_argument("EnsembleSpec: trajectories must be >= 1");
        if (!(horizon > 0.0)) throw std::invalid_argument("EnsembleSpec: horizon must be > 0");
    }
};

struct ValueWithError {
    double value = 0.0;
    double std_error = 0.0;
};

/// Telegraph path with Poisson flips of rate gamma and a uniform random
/// initial sign. The flip rate equals gamma (not 2 gamma): a process flipping
/// at rate lambda has correlation a^2 exp(-2 lambda tau), so matching
/// chi = a^2 exp(-2 gamma tau) forces lambda = gamma.
inline Trajectory sample_trajectory(const Fluctuator& f, double horizon, RngStream& rng) {
    if (!(horizon > 0.0)) throw std::invalid_argument("sample_trajectory: horizon must be > 0");
    Trajectory traj;
    traj.horizon = horizon;
    traj.initial_sign = rng.sign();
    double t = rng.exponential(f.rate);
    while (t <= horizon) {
        traj.flip_times.push_back(t);
        t += rng.exponential(f.rate);
    }
    return traj;
}

/// N-fluctuator discretization of a band: amplitudes sigma/sqrt(N), rates
/// i.i.d. from P_n(gamma) by inverse CDF.
inline std::vector<Fluctuator> discretize_band(const NoiseBand& band, int count, RngStream& rng) {
    if (count < 1) throw std::invalid_argument("discretize_band: count must be >= 1");
    std::vector<Fluctuator> out;
    out.reserve(count);
    const double amp = band.sigma / std::sqrt(static_cast<double>(count));
    const double log_ratio = std::log(band.gamma_hi / band.gamma_lo);
    for (int i = 0; i < count; ++i) {
        const double u = rng.uniform01();
        double gamma;
        if (band.n == 1) {
            gamma = band.gamma_lo * std::exp(u * log_ratio);
        } else {
            // F(gamma) = A_n (gamma_lo^{1-n} - gamma^{1-n}) / (n-1)
            const double a_n = normalization_constant(band);
            const double base = std::pow(band.gamma_lo, 1 - band.n);
            gamma = std::pow(base - u * (band.n - 1) / a_n, 1.0 / (1 - band.n));
        }
        out.push_back({amp, gamma});
    }
    return out;
}

namespace detail {

// One realization of xi_N: merged flip events of all member trajectories with
// prefix values and prefix integrals, supporting exact evaluation of xi(t)
// and of int_0^t xi.
struct EnsemblePath {
    std::vector<double> event_times;  // sorted
    std::vector<double> value_after;  // xi on [event_times[k], event_times[k+1])
    std::vector<double> integral_at;  // int_0^{event_times[k]} xi
    double value0 = 0.0;              // xi on [0, event_times[0])

    double value(double t) const {
        const auto it = std::upper_bound(event_times.begin(), event_times.end(), t);
        const auto k = static_cast<std::size_t>(it - event_times.begin());
        return k == 0 ? value0 : value_after[k - 1];
    }

    double integral(double t) const {
        const auto it = std::upper_bound(event_times.begin(), event_times.end(), t);
        const auto k = static_cast<std::size_t>(it - event_times.begin());
        if (k == 0) return value0 * t;
        return integral_at[k - 1] + value_after[k - 1] * (t - event_times[k - 1]);
    }
};

inline EnsemblePath build_ensemble_path(const EnsembleSpec& spec, RngStream& rng) {
    struct Event {
        double t;
        double jump; // change of xi at the flip
    };
    const double horizon = spec.horizon;
    std::vector<Fluctuator> members = spec.fluctuators;
    for (const auto& src : spec.resampled_bands) {
        const auto drawn = discretize_band(src.band, src.count, rng);
        members.insert(members.end(), drawn.begin(), drawn.end());
    }
    std::vector<Event> events;
    double value0 = 0.0;
    for (const auto& f : members) {
        const Trajectory traj = sample_trajectory(f, horizon, rng);
        double sign = traj.initial_sign;
        value0 += f.amplitude * sign;
        for (double ft : traj.flip_times) {
            events.push_back({ft, -2.0 * f.amplitude * sign});
            sign = -sign;
        }
    }
    std::sort(events.begin(), events.end(),
              [](const Event& a, const Event& b) { return a.t < b.t; });

    EnsemblePath path;
    path.value0 = value0;
    path.event_times.reserve(events.size());
    path.value_after.reserve(events.size());
    path.integral_at.reserve(events.size());
    double value = value0;
    double integral = 0.0;
    double prev_t = 0.0;
    for (const auto& ev : events) {
        integral += value * (ev.t - prev_t);
        value += ev.jump;
        path.event_times.push_back(ev.t);
        path.value_after.push_back(value);
        path.integral_at.push_back(integral);
        prev_t = ev.t;
    }
    return path;
}

// Deterministic block-parallel accumulation: realizations are processed in
// fixed-size blocks, block partial sums are merged in block order, so results
// are bit-identical for any worker count.
template <class PerRealization, class Accumulator>
void block_parallel(int realizations, int threads, PerRealization&& per_realization,
                    std::vector<Accumulator>& block_sums, int block_size = 256) {
    const int blocks = (realizations + block_size - 1) / block_size;
    block_sums.assign(blocks, Accumulator{});
    const int workers = std::max(1, std::min(threads, blocks));
    auto run_block = [&](int b) {
        const int begin = b * block_size;
        const int end = std::min(realizations, begin + block_size);
        for (int r = begin; r < end; ++r) per_realization(r, block_sums[b]);
    };
    if (workers == 1) {
        for (int b = 0; b < blocks; ++b) run_block(b);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (int b = w; b < blocks; b += workers) run_block(b);
        });
    }
    for (auto& th : pool) th.join();
}

inline double std_error_from_sums(double sum, double sum_sq, int n) {
    if (n < 2) return 0.0;
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1));
    return std::sqrt(var / n);
}

} // namespace detail

/// Time-and-ensemble average of xi(t) xi(t+tau) with standard errors over
/// realizations (for the plain mean the jackknife reduces to the usual
/// standard error of the mean, which is what is computed here).
inline std::vector<ValueWithError> empirical_correlation(const EnsembleSpec& spec,
                                                         std::span<const double> taus,
                                                         int threads = 1) {
    spec.validate();
    for (double tau : taus)
        if (tau < 0.0 || tau > spec.horizon / 2)
            throw std::invalid_argument("empirical_correlation: requires 0 <= tau <= horizon/2");

    struct Sums {
        std::vector<double> sum, sum_sq;
    };
    std::vector<Sums> blocks;
    detail::block_parallel(
        spec.trajectories, threads,
        [&](int r, Sums& acc) {
            if (acc.sum.empty()) {
                acc.sum.assign(taus.size(), 0.0);
                acc.sum_sq.assign(taus.size(), 0.0);
            }
            RngStream rng(spec.seed, static_cast<std::uint64_t>(r));
            const auto path = detail::build_ensemble_path(spec, rng);
            for (std::size_t j = 0; j < taus.size(); ++j) {
                const double tau = taus[j];
                const double span = spec.horizon - tau;
                // exact integral of xi(t) xi(t+tau) over piecewise-constant segments
                double integral = 0.0;
                double t = 0.0;
                std::size_t ia = 0, ib = 0; // next events of xi(t), xi(t+tau)
                const auto& ev = path.event_times;
                ib = static_cast<std::size_t>(
                    std::upper_bound(ev.begin(), ev.end(), tau) - ev.begin());
                double va = path.value0;
                double vb = ib == 0 ? path.value0 : path.value_after[ib - 1];
                while (t < span) {
                    const double next_a =
                        ia < ev.size() ? ev[ia] : std::numeric_limits<double>::infinity();
                    const double next_b =
                        ib < ev.size() ? ev[ib] - tau : std::numeric_limits<double>::infinity();
                    const double t_next = std::min({span, next_a, next_b});
                    integral += va * vb * (t_next - t);
                    t = t_next;
                    if (t_next >= next_a) va = path.value_after[ia++];
                    if (t_next >= next_b) vb = path.value_after[ib++];
                }
                const double estimate = integral / span;
                acc.sum[j] += estimate;
                acc.sum_sq[j] += estimate * estimate;
            }
        },
        blocks);

    std::vector<ValueWithError> out(taus.size());
    for (std::size_t j = 0; j < taus.size(); ++j) {
        double sum = 0.0, sum_sq = 0.0;
        for (const auto& b : blocks) {
            if (b.sum.empty()) continue;
            sum += b.sum[j];
            sum_sq += b.sum_sq[j];
        }
        out[j].value = sum / spec.trajectories;
        out[j].std_error = detail::std_error_from_sums(sum, sum_sq, spec.trajectories);
    }
    return out;
}

/// Monte-Carlo decay envelope <e^{i phi(t)}> with phi = D int_0^t xi for
/// free induction and the sign of the accumulation reversed at t/2 for echo.
inline DecayCurve empirical_envelope(const EnsembleSpec& spec, Protocol protocol,
                                     double coupling_d, std::span<const double> t_grid,
                                     int threads = 1) {
    spec.validate();
    for (double t : t_grid)
        if (t < 0.0 || t > spec.horizon)
            throw std::invalid_argument("empirical_envelope: grid must lie in [0, horizon]");

    struct Sums {
        std::vector<double> re, im, re_sq, im_sq;
    };
    std::vector<Sums> blocks;
    detail::block_parallel(
        spec.trajectories, threads,
        [&](int r, Sums& acc) {
            if (acc.re.empty()) {
                acc.re.assign(t_grid.size(), 0.0);
                acc.im.assign(t_grid.size(), 0.0);
                acc.re_sq.assign(t_grid.size(), 0.0);
                acc.im_sq.assign(t_grid.size(), 0.0);
            }
            RngStream rng(spec.seed, static_cast<std::uint64_t>(r));
            const auto path = detail::build_ensemble_path(spec, rng);
            for (std::size_t j = 0; j < t_grid.size(); ++j) {
                const double t = t_grid[j];
                const double phase_integral = protocol == Protocol::fid
                                                  ? path.integral(t)
                                                  : 2.0 * path.integral(0.5 * t) - path.integral(t);
                const double phi = coupling_d * phase_integral;
                const double re = std::cos(phi);
                const double im = std::sin(phi);
                acc.re[j] += re;
                acc.im[j] += im;
                acc.re_sq[j] += re * re;
                acc.im_sq[j] += im * im;
            }
        },
        blocks);

    DecayCurve curve;
    curve.method = "monte-carlo";
    curve.t.assign(t_grid.begin(), t_grid.end());
    curve.value.resize(t_grid.size());
    curve.stderr_re.resize(t_grid.size());
    curve.stderr_im.resize(t_grid.size());
    for (std::size_t j = 0; j < t_grid.size(); ++j) {
        double re = 0.0, im = 0.0, re_sq = 0.0, im_sq = 0.0;
        for (const auto& b : blocks) {
            if (b.re.empty()) continue;
            re += b.re[j];
            im += b.im[j];
            re_sq += b.re_sq[j];
            im_sq += b.im_sq[j];
        }
        const int n = spec.trajectories;
        curve.value[j] = {re / n, im / n};
        curve.stderr_re[j] = detail::std_error_from_sums(re, re_sq, n);
        curve.stderr_im[j] = detail::std_error_from_sums(im, im_sq, n);
    }
    return curve;
}

/// Estimate of <zeta(t1) zeta(t2) zeta(t3) zeta(t4)> for a single fluctuator
/// at ordered times t1 >= t2 >= t3 >= t4 >= 0.
inline ValueWithError empirical_moment4(const Fluctuator& f, std::array<double, 4> times,
                                        int n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw std::invalid_argument("empirical_moment4: n_samples must be >= 1");
    for (int i = 0; i + 1 < 4; ++i)
        if (times[i] < times[i + 1])
            throw std::invalid_argument("empirical_moment4: times must satisfy t1 >= t2 >= t3 >= t4");
    if (times[3] < 0.0) throw std::invalid_argument("empirical_moment4: times must be >= 0");

    const double horizon = std::max(times[0], 1e-12);
    double sum = 0.0, sum_sq = 0.0;
    for (int r = 0; r < n_samples; ++r) {
        RngStream rng(seed, static_cast<std::uint64_t>(r));
        const Trajectory traj = sample_trajectory(f, horizon, rng);
        double product = 1.0;
        for (double t : times) product *= f.amplitude * traj.sign_at(t);
        sum += product;
        sum_sq += product * product;
    }
    return {sum / n_samples, detail::std_error_from_sums(sum, sum_sq, n_samples)};
}

} // namespace fluctuon
