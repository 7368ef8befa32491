#pragma once

#include <algorithm>
#include <vector>

#include "qmem/constants.hpp"
#include "qmem/envelope.hpp"

namespace qmem {

// Control (coupling) beam during a memory run. The envelope is a gated
// constant-amplitude wave; a linear carrier sweep (the time-lens chirp) is
// tracked through the instantaneous two-photon detuning
//   delta(t) = two_photon_detuning - chirp * t,
// i.e. sweeping the coupling carrier up walks the two-photon detuning down.
// k_mismatch is the longitudinal wavevector difference k_c - k_s that the
// written spin wave inherits; 0 means collinear beams of equal wavelength.
struct CouplingDrive {
    double amplitude = 0.0;  // |Omega_c|, rad/s
    double t_on = 0.0;       // gate opens, s
    double t_off = 0.0;      // gate closes, s (t_off <= t_on: always off)
    double chirp = 0.0;      // carrier sweep rate, rad/s^2
    double two_photon_detuning = 0.0;  // delta at t = 0, rad/s
    double k_mismatch = 0.0;           // rad/m

    bool gate(double t) const { return t >= t_on && t < t_off; }
    double rabi(double t) const { return gate(t) ? amplitude : 0.0; }
    double delta(double t) const { return two_photon_detuning - chirp * t; }
};

inline CouplingDrive constant_drive(double amplitude, double t_on, double t_off,
                                    double two_photon_detuning = 0.0) {
    CouplingDrive d;
    d.amplitude = amplitude;
    d.t_on = t_on;
    d.t_off = t_off;
    d.two_photon_detuning = two_photon_detuning;
    return d;
}

// Piecewise-constant Zeeman gradient: beta(t) of the chronologically last
// segment whose t_start has passed; zero before the first segment.
struct GradientSchedule {
    struct Segment {
        double t_start;  // s
        double beta;     // rad/s per m
    };
    std::vector<Segment> segments;

    GradientSchedule() = default;
    explicit GradientSchedule(std::vector<Segment> segs) : segments(std::move(segs)) {
        for (std::size_t i = 1; i < segments.size(); ++i)
            if (!(segments[i].t_start > segments[i - 1].t_start))
                throw ConfigError("GradientSchedule: segments must be strictly time-ordered");
    }

    double beta(double t) const {
        double b = 0.0;
        for (const Segment& s : segments) {
            if (s.t_start <= t)
                b = s.beta;
            else
                break;
        }
        return b;
    }
};

}  // namespace qmem
