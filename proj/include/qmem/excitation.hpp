#pragma once

#include "qmem/constants.hpp"
#include "qmem/ensemble.hpp"
#include "qmem/envelope.hpp"

namespace qmem {

// Default beam cross-section: 0.1 mm diameter disc. Converts the solver's
// per-area bookkeeping into absolute excitation numbers.
inline constexpr double default_beam_area = 7.853981633974483e-9;  // m^2

struct ExcitationCounts {
    double atoms = 0.0;    // number of spin-wave excitations
    double photons = 0.0;  // number of signal photons
};

// Photon-count weight per |Omega|^2 dt: signal envelopes store the Rabi
// frequency Omega_s = d E / hbar, so the photon flux per unit area is
// (eps0 c / 2 hbar omega0) |A|^2 = (eps0 c hbar / 2 omega0 d^2) |Omega|^2.
inline double photon_weight(const Transition& tr) {
    const PhysConsts k{};
    return k.eps0 * k.c * k.hbar / (2.0 * tr.omega0 * tr.dipole * tr.dipole);
}

inline double atom_count(const AtomEnsemble& ens, const ComplexEnvelope& coherence,
                         double area = default_beam_area) {
    if (coherence.kind != EnvelopeKind::coherence_in_z)
        throw ConfigError("atom_count: expected a coherence-in-z envelope");
    if (coherence.size() != ens.density.size())
        throw ConfigError("atom_count: envelope and ensemble grids differ");
    double s = 0.0;
    for (std::size_t i = 0; i < coherence.size(); ++i)
        s += ens.density[i] * std::norm(coherence.values[i]);
    return s * ens.grid.step * area;
}

// Trapezoid rule on |Omega(t)|^2; the envelopes handed around vanish at the
// window edges, so this matches the solver's per-slice accumulation.
inline double photon_count(const Transition& tr, const ComplexEnvelope& signal,
                           double area = default_beam_area) {
    if (signal.kind != EnvelopeKind::signal_in_time)
        throw ConfigError("photon_count: expected a signal-in-time envelope");
    const double w = photon_weight(tr);
    double s = 0.0;
    for (std::size_t j = 0; j < signal.size(); ++j) {
        const double v = std::norm(signal.values[j]);
        s += (j == 0 || j + 1 == signal.size()) ? 0.5 * v : v;
    }
    return w * s * signal.grid.step * area;
}

inline ExcitationCounts excitation_counts(const AtomEnsemble& ens, const Transition& tr,
                                          const ComplexEnvelope& coherence,
                                          const ComplexEnvelope& signal,
                                          double area = default_beam_area) {
    return {atom_count(ens, coherence, area), photon_count(tr, signal, area)};
}

}  // namespace qmem
