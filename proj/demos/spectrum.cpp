// spectrum.cpp — Total spectral density of a slow 1/f band plus a fast
// Lorentzian-tail band over a log-frequency grid.

#include <cmath>
#include <fstream>
#include <iostream>

#include "fluctuon/noise_model.hpp"

int main() {
    using namespace fluctuon;
    // 2 gamma_m = 1 s^-1, 2 gamma_c = 1 us^-1, 2 gamma_0 = 10 us^-1
    const NoiseBand slow(1, 1.0, 5e-7, 0.5);
    const NoiseBand fast(2, 1.0, 0.5, 5.0);
    const double amp = 1.0 / (2.0 * std::log(slow.gamma_hi / slow.gamma_lo));

    std::ofstream out("spectrum.csv");
    out.precision(17);
    out << "f_mhz,s1,s2,s_total,one_over_f_ref\n";
    for (int i = 0; i <= 400; ++i) {
        const double f = std::pow(10.0, -7.0 + 9.0 * i / 400.0); // MHz
        const double omega = 2.0 * M_PI * f;
        const double s1 = spectral_density(slow, omega);
        const double s2 = spectral_density(fast, omega);
        out << f << ',' << s1 << ',' << s2 << ',' << s1 + s2 << ',' << amp / omega << '\n';
    }
    std::cout << "wrote spectrum.csv\n";
    return 0;
}
