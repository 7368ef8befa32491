#pragma once

#include <complex>
#include <utility>

#include "qmem/constants.hpp"
#include "qmem/envelope.hpp"

namespace qmem {

// Optical coherences after adiabatic elimination of the excited state,
// valid far off single-photon resonance (|Delta| > 10 Gamma). These are the
// fast variables the memory solver never integrates explicitly.
inline std::pair<cplx, cplx> adiabatic_optical_coherences(cplx rho_gh, cplx omega_s,
                                                          cplx omega_c, double delta,
                                                          double gamma) {
    if (delta == 0.0)
        throw NumericError("adiabatic_optical_coherences: singular elimination at delta = 0");
    const cplx den = cplx(2.0 * delta, -gamma);
    const cplx i1(0.0, 1.0);
    const cplx rho_ge = i1 * (std::conj(omega_s) + std::conj(omega_c) * rho_gh) / den;
    const cplx rho_he = i1 * std::conj(omega_s) * std::conj(rho_gh) / den;
    return {rho_ge, rho_he};
}

// Light shift of the two-photon line produced by the coupling beam.
inline double ac_stark_shift(double omega_c_abs, double delta, double gamma) {
    const double o2 = omega_c_abs * omega_c_abs;
    return -delta * o2 / (gamma * gamma + 4.0 * delta * delta);
}

// Power-broadening decay rate of the ground-state coherence under the
// coupling beam (amplitude rate; intensity decays at twice this).
inline double power_broadening_rate(double omega_c_abs, double delta, double gamma) {
    const double o2 = omega_c_abs * omega_c_abs;
    return 0.5 * gamma * o2 / (gamma * gamma + 4.0 * delta * delta);
}

}  // namespace qmem
