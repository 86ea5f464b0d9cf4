// decay_curve.hpp — Sampled complex decay envelopes and their CSV form

#pragma once

#include <complex>
#include <ostream>
#include <string>
#include <vector>

namespace fluctuon {

enum class Protocol { fid, echo };

inline const char* to_string(Protocol p) { return p == Protocol::fid ? "fid" : "echo"; }

/// A decay envelope <e^{i phi(t)}> (or <rho_01(t)>) sampled on a time grid.
/// Monte-Carlo estimates carry per-point standard errors; closed-form curves
/// leave the error vectors empty.
struct DecayCurve {
    std::vector<double> t;                     // us
    std::vector<std::complex<double>> value;
    std::vector<double> stderr_re;
    std::vector<double> stderr_im;
    std::string method;

    bool has_stderr() const { return !stderr_re.empty(); }
};

/// CSV columns t,re,im,abs[,stderr]; the method tag and any extra header
/// lines are emitted as leading '#' comments. Full double precision so files
/// can serve as bit-exact regression baselines.
inline void write_csv(std::ostream& os, const DecayCurve& curve,
                      const std::vector<std::string>& extra_header = {}) {
    os.precision(17);
    os << "# method: " << curve.method << '\n';
    for (const auto& line : extra_header) os << "# " << line << '\n';
    os << "t,re,im,abs";
    if (curve.has_stderr()) os << ",stderr";
    os << '\n';
    for (std::size_t i = 0; i < curve.t.size(); ++i) {
        os << curve.t[i] << ',' << curve.value[i].real() << ',' << curve.value[i].imag() << ','
           << std::abs(curve.value[i]);
        if (curve.has_stderr()) {
            const double se = std::hypot(curve.stderr_re[i], curve.stderr_im[i]);
            os << ',' << se;
        }
        os << '\n';
    }
}

} // namespace fluctuon
