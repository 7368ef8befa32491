#pragma once

#include <complex>
#include <utility>

#include "qmem/envelope.hpp"

namespace qmem {

// Elementary beamsplitter-like exchange between one atomic cell and one
// field cell, both scaled so |u|^2 counts excitations. Exactly unitary:
// |u_at|^2 + |u_ph|^2 is preserved to rounding, which is what makes long
// chains of memory cells conserve the total excitation number.
inline std::pair<cplx, cplx> step_rotation(cplx u_at, cplx u_ph, double alpha) {
    const double c = std::cos(alpha);
    const double s = std::sin(alpha);
    return {c * u_at + s * u_ph, -s * u_at + c * u_ph};
}

// Same exchange for a complex angle argument: the modulus sets the mixing
// angle, the phase is a gauge on the field leg. Generator [[0, a],[-a*, 0]].
inline std::pair<cplx, cplx> step_rotation_phased(cplx u_at, cplx u_ph, cplx alpha) {
    const double mag = std::abs(alpha);
    if (mag == 0.0) return {u_at, u_ph};
    const cplx e = alpha / mag;
    const double c = std::cos(mag);
    const double s = std::sin(mag);
    return {c * u_at + s * e * u_ph, -s * std::conj(e) * u_at + c * u_ph};
}

}  // namespace qmem
