#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

// All frequencies in this library are angular (rad/s). Helpers that accept
// laboratory units live in the CLI layer; the core never guesses units.

namespace qmem {

inline constexpr double two_pi = 6.283185307179586476925286766559;

// CODATA-2018 values, SI.
struct PhysConsts {
    double hbar = 1.054571817e-34;   // J s
    double eps0 = 8.8541878128e-12;  // F/m
    double c = 2.99792458e8;         // m/s
    double muB = 9.2740100783e-24;   // J/T
    double kB = 1.380649e-23;        // J/K
    double rb87_mass = 1.44316060e-25;  // kg
};

inline const PhysConsts& consts() {
    static const PhysConsts k{};
    return k;
}

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One optical transition of the storage Lambda system. The wavevector is
// k0 = omega0 / c; the constructor derives it so the pair can never drift
// apart.
struct Transition {
    double dipole;  // effective dipole moment, C m
    double gamma;   // natural linewidth (angular FWHM), rad/s
    double omega0;  // carrier angular frequency, rad/s
    double k0;      // carrier wavevector, rad/m

    Transition(double dipole_, double gamma_, double omega0_)
        : dipole(dipole_), gamma(gamma_), omega0(omega0_), k0(omega0_ / PhysConsts{}.c) {
        if (dipole <= 0 || gamma <= 0 || omega0 <= 0)
            throw ConfigError("Transition: dipole, gamma and omega0 must be positive");
    }
};

// Rb87 D1 line (795 nm), the readout/storage transition.
inline Transition rb87_d1() {
    return Transition(2.537e-29, two_pi * 5.75e6, two_pi * 3.7710746e14);
}

// Rb87 D2 line (780 nm), the write transition.
inline Transition rb87_d2() {
    return Transition(2.534e-29, two_pi * 6.065e6, two_pi * 3.8423049e14);
}

// An additional excited level participating in a Lambda scheme, described
// relative to the reference transition: its one-photon detuning and the
// ratio of its dipole moment to the reference one. A negative ratio encodes
// an opposite-sign coupling path.
struct ExcitedLevel {
    double detuning;      // rad/s
    double dipole_ratio;  // dimensionless, may be negative
};

}  // namespace qmem
