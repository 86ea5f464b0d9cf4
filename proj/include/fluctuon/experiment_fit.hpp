// experiment_fit.hpp — Derived decay rates, published presets, dataset I/O, and
// least-squares fitting of the fast-fluctuator parameters (v_2, gamma_0)

#pragma once

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fluctuon/decay_curve.hpp"
#include "fluctuon/dephasing.hpp"
#include "fluctuon/errors.hpp"
#include "fluctuon/nelder_mead.hpp"

namespace fluctuon {

struct DatasetSample {
    double t;           // us
    double value;       // envelope
    double sigma = 0.0; // optional 1-sigma uncertainty; 0 means undeclared
};

struct ExperimentDataset {
    std::string label;
    Protocol protocol = Protocol::echo;
    std::vector<DatasetSample> samples;

    void validate() const {
        if (samples.empty()) throw std::invalid_argument("ExperimentDataset: no samples");
        for (std::size_t i = 1; i < samples.size(); ++i)
            if (!(samples[i].t > samples[i - 1].t))
                throw std::invalid_argument("ExperimentDataset: t must be strictly increasing");
        const auto& first = samples.front();
        const double slack = first.sigma > 0.0 ? 5.0 * first.sigma : 0.05;
        if (std::abs(first.value - 1.0) > slack)
            throw std::invalid_argument("ExperimentDataset: first sample must be ~1");
    }
};

struct FitResult {
    double v2 = 0.0;      // rad us^-1
    double gamma_0 = 0.0; // us^-1
    double gamma_2 = 0.0; // derived effective rate
    double sse = 0.0;
    int iterations = 0;
};

/// Fitted constants of one measured sample, stored verbatim from their
/// published values (units us^-1 / rad us^-1; NaN where not stated).
struct SamplePreset {
    std::string name;
    double gamma_m = std::numeric_limits<double>::quiet_NaN();
    double gamma_c = std::numeric_limits<double>::quiet_NaN();
    double gamma_0 = std::numeric_limits<double>::quiet_NaN();
    double gamma_1 = 0.0;
    double gamma_2 = 0.0;
    double v1 = 0.0;
    double v2 = 0.0;
    double echo_rate = 0.0;           // Gamma_phiE
    bool exponential_decay = false;   // reference curve e^{-Gamma t} instead of e^{-(Gamma t)^2}

    bool has_bands() const { return std::isfinite(gamma_m) && std::isfinite(gamma_0); }
};

/// Gaussian echo dephasing rate Gamma_phiE = sqrt(A_lambda ln 2) |dE01/dlambda|.
inline double echo_rate_gaussian(double a_lambda, double de_dlambda) {
    if (a_lambda < 0.0) throw std::domain_error("echo_rate_gaussian: A_lambda must be >= 0");
    return std::sqrt(a_lambda * M_LN2) * std::abs(de_dlambda);
}

/// v_1 = Gamma_phiE sqrt(2 ln(gamma_c/gamma_m) / ln 2).
inline double v1_from_echo_rate(double gamma_phi_e, double gamma_m, double gamma_c) {
    if (gamma_phi_e < 0.0) throw std::domain_error("v1_from_echo_rate: rate must be >= 0");
    if (!(gamma_m > 0.0) || !(gamma_m < gamma_c))
        throw std::domain_error("v1_from_echo_rate: requires 0 < gamma_m < gamma_c");
    return gamma_phi_e * std::sqrt(2.0 * std::log(gamma_c / gamma_m) / M_LN2);
}

/// Gaussian free-induction rate Gamma_phiF = sqrt((v1^2 + v2^2)/2).
inline double fid_rate_gaussian(double v1, double v2) {
    if (v1 < 0.0 || v2 < 0.0) throw std::domain_error("fid_rate_gaussian: v must be >= 0");
    return std::sqrt(0.5 * (v1 * v1 + v2 * v2));
}

/// gamma_2 as a function of the fast-band cutoffs.
inline double gamma2_from_cutoffs(double gamma_c, double gamma_0) {
    if (!(gamma_c > 0.0) || !(gamma_0 > gamma_c))
        throw std::domain_error("gamma2_from_cutoffs: requires 0 < gamma_c < gamma_0");
    return gamma_c * std::log(gamma_0 / gamma_c) / (1.0 - gamma_c / gamma_0);
}

inline std::vector<SamplePreset> sample_presets() {
    std::vector<SamplePreset> presets(3);
    presets[0].name = "sample-a-flux";
    presets[0].gamma_m = 5e-7;
    presets[0].gamma_c = 0.5;
    presets[0].gamma_0 = 4.25;
    presets[0].gamma_1 = 0.04;
    presets[0].gamma_2 = 1.2;
    presets[0].v1 = 4.92;
    presets[0].v2 = 2.72;
    presets[0].echo_rate = 0.8;

    presets[1].name = "sample-b-flux";
    presets[1].gamma_m = 5e-7;
    presets[1].gamma_c = 0.5;
    presets[1].gamma_1 = 0.04;
    presets[1].gamma_2 = 5.75;
    presets[1].v1 = 21.0;
    presets[1].v2 = 12.45;
    presets[1].echo_rate = 3.75;

    presets[2].name = "sample-a-bias";
    presets[2].gamma_1 = 0.04;
    presets[2].gamma_2 = 2.0;
    presets[2].v1 = 10.5;
    presets[2].v2 = 50.0;
    presets[2].echo_rate = 1.7;
    presets[2].exponential_decay = true;
    return presets;
}

inline const SamplePreset& find_preset(const std::string& name) {
    static const std::vector<SamplePreset> presets = sample_presets();
    for (const auto& p : presets)
        if (p.name == name) return p;
    throw ConfigError("unknown preset: " + name);
}

struct FitBounds {
    double v2_lo = 1e-3, v2_hi = 100.0;
    double gamma0_lo_offset = 1e-3; // above gamma_c
    double gamma0_hi = 1000.0;
};

/// Least-squares fit of (v_2, gamma_0) with the slow fluctuator fixed:
/// model(t) = Phi_1(gamma_1, v_1) * Phi_2(gamma_2(gamma_0), v_2). Bounds are
/// enforced through the transform v_2 = exp(u_1), gamma_0 = gamma_c + exp(u_2)
/// plus clamping in u-space; the initial simplex is fixed, so the fit is
/// deterministic.
inline FitResult fit_fast_fluctuator(const ExperimentDataset& dataset,
                                     const EffectiveFluctuator& slow, double gamma_c,
                                     const FitBounds& bounds = {}, double d_z = 1.0,
                                     int max_iterations = 600) {
    dataset.validate();
    if (dataset.samples.size() < 6)
        throw std::invalid_argument("fit_fast_fluctuator: needs at least 6 samples");
    if (!(gamma_c > 0.0)) throw std::invalid_argument("fit_fast_fluctuator: gamma_c must be > 0");

    const double v1 = std::abs(d_z) * slow.a_star;
    const bool echo = dataset.protocol == Protocol::echo;

    const double u1_lo = std::log(bounds.v2_lo), u1_hi = std::log(bounds.v2_hi);
    const double u2_lo = std::log(bounds.gamma0_lo_offset),
                 u2_hi = std::log(bounds.gamma0_hi - gamma_c);

    auto objective = [&](const std::vector<double>& u) {
        const double u1 = std::clamp(u[0], u1_lo, u1_hi);
        const double u2 = std::clamp(u[1], u2_lo, u2_hi);
        const double v2 = std::exp(u1);
        const double gamma_0 = gamma_c + std::exp(u2);
        const double g2 = gamma2_from_cutoffs(gamma_c, gamma_0);
        double sse = 0.0;
        for (const auto& s : dataset.samples) {
            const double p1 = echo ? phi_echo(slow.gamma_star, v1, s.t)
                                   : phi_fid(slow.gamma_star, v1, s.t);
            const double p2 = echo ? phi_echo(g2, v2, s.t) : phi_fid(g2, v2, s.t);
            const double r = p1 * p2 - s.value;
            const double w = s.sigma > 0.0 ? 1.0 / (s.sigma * s.sigma) : 1.0;
            sse += w * r * r;
        }
        return sse;
    };

    NelderMeadOptions opt;
    opt.max_iterations = max_iterations;
    opt.diameter_tol = 1e-6 * ((u1_hi - u1_lo) + (u2_hi - u2_lo));
    std::vector<double> u0 = {0.5 * (u1_lo + u1_hi), 0.5 * (u2_lo + u2_hi)};
    std::vector<double> step = {0.05 * (u1_hi - u1_lo), 0.05 * (u2_hi - u2_lo)};
    const auto sol = nelder_mead(objective, u0, step, opt);

    FitResult result;
    result.v2 = std::exp(std::clamp(sol.x[0], u1_lo, u1_hi));
    result.gamma_0 = gamma_c + std::exp(std::clamp(sol.x[1], u2_lo, u2_hi));
    result.gamma_2 = gamma2_from_cutoffs(gamma_c, result.gamma_0);
    result.sse = sol.fx;
    result.iterations = sol.iterations;
    return result;
}

/// CSV columns t_us, envelope[, sigma]; '#' comments and an optional header
/// row are skipped. Malformed rows report their line number.
inline ExperimentDataset parse_dataset(std::istream& is, const std::string& origin = "<stream>") {
    ExperimentDataset dataset;
    dataset.label = origin;
    std::string line;
    int line_no = 0;
    bool saw_data = false;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 2 && fields.size() != 3)
            throw IoError(origin + ":" + std::to_string(line_no) + ": expected 2 or 3 columns");
        DatasetSample sample;
        try {
            sample.t = std::stod(fields[0]);
            sample.value = std::stod(fields[1]);
            if (fields.size() == 3) sample.sigma = std::stod(fields[2]);
        } catch (const std::exception&) {
            if (!saw_data) continue; // header row
            throw IoError(origin + ":" + std::to_string(line_no) + ": malformed row");
        }
        saw_data = true;
        dataset.samples.push_back(sample);
    }
    dataset.validate();
    return dataset;
}

inline ExperimentDataset load_dataset(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw IoError("cannot open dataset file: " + path);
    return parse_dataset(file, path);
}

inline void write_dataset_csv(std::ostream& os, const ExperimentDataset& dataset) {
    os.precision(17);
    os << "t_us,envelope";
    const bool with_sigma = !dataset.samples.empty() && dataset.samples.front().sigma > 0.0;
    if (with_sigma) os << ",sigma";
    os << '\n';
    for (const auto& s : dataset.samples) {
        os << s.t << ',' << s.value;
        if (with_sigma) os << ',' << s.sigma;
        os << '\n';
    }
}

} // namespace fluctuon
