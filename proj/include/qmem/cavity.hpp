#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "qmem/array2d.hpp"
#include "qmem/constants.hpp"
#include "qmem/ensemble.hpp"
#include "qmem/envelope.hpp"
#include "qmem/excitation.hpp"

namespace qmem {

// Readout level pair on the D1 line: the reference excited level at delta_f
// plus the second hyperfine level 2 pi 814 MHz above it (so its detuning is
// smaller by that much), coupling with dipole ratio -1/sqrt(3). Loss terms
// weight the ratio squared; the two-photon couplings carry it once, so the
// second path interferes destructively with the first.
inline std::vector<ExcitedLevel> d1_readout_levels(double delta_f) {
    return {{delta_f, 1.0}, {delta_f - two_pi * 814e6, -1.0 / std::sqrt(3.0)}};
}

// Ring cavity wrapped around the cloud for the selective-readout stage. One
// lumped intracavity Rabi amplitude stands for the flat-top circulating
// field; `mirror_T` is the output-coupler power transmission per round trip
// of optical length `length`. With `lock_to_dressed_mode` the cavity is held
// on the atom-pulled resonance: the dispersive part of the atomic
// susceptibility (which at typical readout parameters exceeds the mirror
// rate more than tenfold and would otherwise spoil the conversion) is
// cancelled by a matching cavity detuning, while every damping term is kept.
struct CavityModel {
    double length;        // round-trip length, m
    double mirror_T;      // output-coupler power transmission, in (0,1)
    double readout_rabi;  // readout-beam Rabi frequency on the reference leg, rad/s
    std::vector<ExcitedLevel> detunings;
    double beam_area = default_beam_area;  // transverse mode cross-section, m^2
    bool lock_to_dressed_mode = true;
    bool include_spont_loss = true;

    CavityModel(double len, double T, double rabi, std::vector<ExcitedLevel> levels)
        : length(len), mirror_T(T), readout_rabi(rabi), detunings(std::move(levels)) {
        if (!(length > 0.0)) throw ConfigError("cavity length must be positive");
        if (!(mirror_T > 0.0) || !(mirror_T < 1.0))
            throw ConfigError("mirror transmission must lie in (0,1)");
        if (detunings.empty()) throw ConfigError("cavity model needs at least one excited level");
        for (const ExcitedLevel& lv : detunings)
            if (lv.detuning == 0.0)
                throw ConfigError("cavity model assumes off-resonant excited levels");
    }
};

struct CavityState {
    cplx omega_cav{0.0, 0.0};  // intracavity Rabi amplitude, rad/s
    ComplexEnvelope coherence;  // ground-state coherence over z
    double emitted_photons = 0.0;  // cumulative mirror outflux
};

namespace detail {

// Coefficients of the coupled cavity/coherence equations, derived once per
// step from the model and cloud. `photon_norm` converts |Omega_cav|^2 into a
// photon number such that cavity photons + atomic excitations is the
// conserved pair of the loss-free exchange.
struct CavityRates {
    cplx field_self;    // acts on Omega_cav
    cplx field_source;  // multiplies integral of n rho* dz
    cplx conversion;    // multiplies conj(Omega_cav) in the rho equation
    double broadening;  // amplitude decay of rho from readout scattering
    double photon_norm;
    double kappa_mirror;  // amplitude rate, T c / (2 L)
    double pull;          // dispersive shift removed by the lock, rad/s
};

inline CavityRates cavity_rates(const CavityModel& m, const AtomEnsemble& ens,
                                const Transition& tr) {
    const double cl = consts().c;

    cplx chi_loss{0.0, 0.0};  // sum r^2 / (2 delta + i gamma)
    cplx chi_conv{0.0, 0.0};  // sum r   / (2 delta + i gamma)
    double broadening = 0.0;
    for (const ExcitedLevel& lv : m.detunings) {
        const double r2 = lv.dipole_ratio * lv.dipole_ratio;
        const cplx denom(2.0 * lv.detuning, m.include_spont_loss ? tr.gamma : 0.0);
        chi_loss += r2 / denom;
        chi_conv += lv.dipole_ratio / denom;
        if (m.include_spont_loss)
            broadening += r2 * tr.gamma * m.readout_rabi * m.readout_rabi /
                          (2.0 * tr.gamma * tr.gamma + 8.0 * lv.detuning * lv.detuning);
    }

    CavityRates r;
    r.kappa_mirror = m.mirror_T * cl / (2.0 * m.length);
    const cplx atomic = cplx(0.0, -1.0) * (cl * tr.gamma * ens.od / (2.0 * m.length)) * chi_loss;
    r.pull = atomic.imag();
    r.field_self = (m.lock_to_dressed_mode ? cplx(atomic.real(), 0.0) : atomic) - r.kappa_mirror;
    // Per-atom constant: od / column density for any self-consistent cloud,
    // so it stays defined for an empty cavity too.
    const double coupling = cl * optical_depth(tr, 1.0) * tr.gamma / (2.0 * m.length);
    r.field_source = cplx(0.0, -1.0) * coupling * m.readout_rabi * chi_conv;
    r.conversion = cplx(0.0, 0.5) * m.readout_rabi * std::conj(chi_conv);
    r.broadening = broadening;
    r.photon_norm = m.beam_area / (2.0 * coupling);
    return r;
}

}  // namespace detail

// Atomic excitation number held by a coherence profile, beam-area normalized
// to pair with the cavity photon count.
inline double excitation_count(const CavityModel& m, const AtomEnsemble& ens,
                               const ComplexEnvelope& rho) {
    double s = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i)
        s += ens.density[i] * std::norm(rho.values[i]);
    return m.beam_area * s * ens.grid.step;
}

inline double cavity_photon_count(const CavityModel& m, const AtomEnsemble& ens,
                                  const Transition& tr, cplx omega_cav) {
    return detail::cavity_rates(m, ens, tr).photon_norm * std::norm(omega_cav);
}

// One fixed step of the coupled cavity-field / coherence system. The field
// sees its own dressed-cavity damping plus the collective source from the
// phase-matched projection of rho; rho converts against conj(Omega_cav) and
// decays under readout power broadening. The mirror outflux accumulates in
// emitted_photons through the same Runge-Kutta stages, so the closed-limit
// photon bookkeeping stays consistent with the field integration.
inline CavityState evolve_cavity(const CavityModel& m, const CavityState& state,
                                 const AtomEnsemble& ens, const Transition& tr, double dt) {
    if (state.coherence.kind != EnvelopeKind::coherence_in_z)
        throw ConfigError("cavity state must hold a coherence-in-z profile");
    if (state.coherence.size() != ens.grid.count)
        throw ConfigError("cavity coherence grid does not match the cloud");
    if (!(dt > 0.0)) throw ConfigError("cavity step must be positive");

    const detail::CavityRates r = detail::cavity_rates(m, ens, tr);
    const double fastest =
        std::max({r.kappa_mirror, std::abs(r.pull), std::hypot(r.field_self.real(),
                                                               r.field_self.imag()),
                  r.broadening});
    if (dt * fastest > 0.1)
        throw ConfigError("cavity step does not resolve the fastest rate");

    const std::size_t nz = ens.grid.count;
    const double dz = ens.grid.step;
    const double flux = 2.0 * r.kappa_mirror * r.photon_norm;

    // y = (Omega_cav, rho[0..nz-1]); the emitted tally rides along as a
    // quadrature of |Omega_cav|^2 over the same stages.
    auto deriv = [&](const cplx& x, const std::vector<cplx>& rho, cplx& dx,
                     std::vector<cplx>& drho, double& demit) {
        cplx overlap{0.0, 0.0};
        for (std::size_t i = 0; i < nz; ++i)
            overlap += ens.density[i] * std::conj(rho[i]);
        overlap *= dz;
        dx = r.field_self * x + r.field_source * overlap;
        const cplx src = r.conversion * std::conj(x);
        for (std::size_t i = 0; i < nz; ++i) drho[i] = src - r.broadening * rho[i];
        demit = flux * std::norm(x);
    };

    const std::vector<cplx>& rho0 = state.coherence.values;
    std::vector<cplx> k1r(nz), k2r(nz), k3r(nz), k4r(nz), tmp(nz);
    cplx k1x, k2x, k3x, k4x;
    double k1e, k2e, k3e, k4e;

    deriv(state.omega_cav, rho0, k1x, k1r, k1e);
    for (std::size_t i = 0; i < nz; ++i) tmp[i] = rho0[i] + 0.5 * dt * k1r[i];
    deriv(state.omega_cav + 0.5 * dt * k1x, tmp, k2x, k2r, k2e);
    for (std::size_t i = 0; i < nz; ++i) tmp[i] = rho0[i] + 0.5 * dt * k2r[i];
    deriv(state.omega_cav + 0.5 * dt * k2x, tmp, k3x, k3r, k3e);
    for (std::size_t i = 0; i < nz; ++i) tmp[i] = rho0[i] + dt * k3r[i];
    deriv(state.omega_cav + dt * k3x, tmp, k4x, k4r, k4e);

    CavityState next;
    next.coherence = state.coherence;
    next.omega_cav = state.omega_cav + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    for (std::size_t i = 0; i < nz; ++i)
        next.coherence.values[i] =
            rho0[i] + (dt / 6.0) * (k1r[i] + 2.0 * k2r[i] + 2.0 * k3r[i] + k4r[i]);
    next.emitted_photons =
        state.emitted_photons + (dt / 6.0) * (k1e + 2.0 * k2e + 2.0 * k3e + k4e);
    return next;
}

// Spin-wave profiles expanded over an orthonormal family built from
// {sqrt(n) z^m}: the leading member is sqrt(n)/sqrt(N), the only one the
// flat cavity mode converts, so the amplitude split directly measures
// readout selectivity.
struct ModeAmplitudes {
    std::vector<cplx> c;
    Array2D<double> basis;  // rows are u_j sampled on `grid`
    Grid1D grid;
    double residual;  // excitation fraction outside the basis
};

inline ModeAmplitudes mode_decompose(const ComplexEnvelope& rho, const AtomEnsemble& ens,
                                     std::size_t basis_size) {
    if (rho.kind != EnvelopeKind::coherence_in_z)
        throw ConfigError("mode decomposition expects a coherence-in-z profile");
    if (rho.size() != ens.grid.count)
        throw ConfigError("mode decomposition grid does not match the cloud");
    if (basis_size == 0) throw ConfigError("mode basis needs at least one function");
    if (basis_size > ens.grid.count)
        throw ConfigError("mode basis larger than the grid rank");

    const std::size_t nz = ens.grid.count;
    const double dz = ens.grid.step;
    const double zmid = ens.grid.start + 0.5 * ens.grid.extent();
    const double half = 0.5 * ens.grid.extent();

    ModeAmplitudes out;
    out.grid = ens.grid;
    out.basis = Array2D<double>(basis_size, nz);

    std::vector<double> w(nz);
    for (std::size_t i = 0; i < nz; ++i) w[i] = std::sqrt(ens.density[i]);

    auto dot = [&](const double* a, const double* b) {
        double s = 0.0;
        for (std::size_t i = 0; i < nz; ++i) s += a[i] * b[i];
        return s * dz;
    };

    std::vector<double> v(nz);
    for (std::size_t mth = 0; mth < basis_size; ++mth) {
        for (std::size_t i = 0; i < nz; ++i)
            v[i] = w[i] * std::pow((ens.grid.coord(i) - zmid) / half, static_cast<double>(mth));
        // Two orthogonalization passes hold the family orthonormal to well
        // below the 1e-10 the decomposition is specified to.
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t j = 0; j < mth; ++j) {
                const double proj = dot(&out.basis.at(j, 0), v.data());
                for (std::size_t i = 0; i < nz; ++i) v[i] -= proj * out.basis.at(j, i);
            }
        const double norm = std::sqrt(dot(v.data(), v.data()));
        if (!(norm > 1e-12)) throw NumericError("mode basis is numerically rank deficient");
        for (std::size_t i = 0; i < nz; ++i) out.basis.at(mth, i) = v[i] / norm;
    }

    out.c.resize(basis_size);
    double captured = 0.0;
    for (std::size_t j = 0; j < basis_size; ++j) {
        cplx cj{0.0, 0.0};
        for (std::size_t i = 0; i < nz; ++i)
            cj += out.basis.at(j, i) * w[i] * rho.values[i];
        out.c[j] = cj * dz;
        captured += std::norm(out.c[j]);
    }

    double total = 0.0;
    for (std::size_t i = 0; i < nz; ++i) total += ens.density[i] * std::norm(rho.values[i]);
    total *= dz;
    out.residual = total > 0.0 ? std::max(0.0, (total - captured) / total) : 0.0;
    return out;
}

// Competing-rates probability that a photon entering the cavity is absorbed
// by the cloud before it leaks through the output coupler. The sweep
// variable is the reference-leg detuning; the other levels keep their
// offsets and ratios from the model.
inline double absorption_probability(const CavityModel& m, const AtomEnsemble& ens,
                                     const Transition& tr, double delta_f) {
    const double cl = consts().c;
    const double ref = m.detunings.front().detuning;
    double rate_at = 0.0;
    for (const ExcitedLevel& lv : m.detunings) {
        const double det = delta_f + (lv.detuning - ref);
        rate_at += lv.dipole_ratio * lv.dipole_ratio * cl * tr.gamma * tr.gamma * ens.od /
                   (m.length * (4.0 * det * det + tr.gamma * tr.gamma));
    }
    const double tau_cav = m.length / (cl * m.mirror_T);
    return tau_cav * rate_at / (1.0 + tau_cav * rate_at);
}

struct LifetimeBudget {
    double tau_broadening;  // readout power broadening, s
    double tau_thermal;     // spin-wave washout from thermal motion, s
};

// Storage-lifetime budget during readout. tau_broadening is the excitation
// (probability) lifetime under the summed two-level scattering rates.
// tau_thermal scales as 1/(theta k_w v_th) with v_th = sqrt(kB T / m); the
// dimensionless prefactor is absorbed into one anchor, 80 us at one degree
// and 20 uK, so the exact 1/theta and 1/sqrt(T) scalings are preserved.
inline LifetimeBudget lifetime_budget(const CavityModel& m, double theta,
                                      const AtomEnsemble& ens, const Transition& tr) {
    if (!(theta > 0.0)) throw ConfigError("write/readout angle must be positive");
    double rate = 0.0;
    for (const ExcitedLevel& lv : m.detunings)
        rate += lv.dipole_ratio * lv.dipole_ratio * tr.gamma * m.readout_rabi * m.readout_rabi /
                (2.0 * tr.gamma * tr.gamma + 8.0 * lv.detuning * lv.detuning);
    if (!(rate > 0.0)) throw ConfigError("lifetime budget needs a readout beam");

    LifetimeBudget b;
    b.tau_broadening = 1.0 / (2.0 * rate);
    const double one_degree = two_pi / 360.0;
    b.tau_thermal = 80e-6 * (one_degree / theta) * std::sqrt(20e-6 / ens.temperature);
    return b;
}

struct ReadoutRun {
    double efficiency;            // emitted photons per initial excitation
    double survival_offmatched;   // analytic survival of j != 0 amplitudes
    std::vector<double> time;
    std::vector<double> cavity_photons;
    std::vector<double> atom_excitation;
    std::vector<double> emitted;
};

// Full readout pulse on a phase-matched spin wave of amplitude initial_c0.
// The profile is c0 u0 / sqrt(n), i.e. flat, so every stored excitation sits
// in the convertible mode; off-matched amplitudes would merely decay, which
// the returned survival figure quantifies in closed form.
inline ReadoutRun run_readout(const CavityModel& m, const AtomEnsemble& ens,
                              const Transition& tr, cplx initial_c0, double pulse_duration,
                              double dt = 0.0) {
    if (!(pulse_duration > 0.0)) throw ConfigError("readout pulse must have positive duration");
    if (std::norm(initial_c0) == 0.0)
        throw ConfigError("readout needs a nonzero stored amplitude");

    const detail::CavityRates r = detail::cavity_rates(m, ens, tr);
    const double fastest = std::max(
        {r.kappa_mirror, std::abs(r.pull),
         std::hypot(r.field_self.real(), r.field_self.imag()), r.broadening});
    if (dt <= 0.0) dt = 0.05 / fastest;
    const auto steps = static_cast<std::size_t>(std::ceil(pulse_duration / dt));
    dt = pulse_duration / static_cast<double>(steps);

    const double ncol = ens.column_density();
    if (!(ncol > 0.0)) throw ConfigError("cavity readout needs a populated cloud");
    CavityState state;
    state.coherence = ComplexEnvelope(ens.grid, EnvelopeKind::coherence_in_z);
    const cplx rho0 = initial_c0 / std::sqrt(ncol);
    for (auto& v : state.coherence.values) v = rho0;

    const double n0 = excitation_count(m, ens, state.coherence);
    ReadoutRun run;
    run.time.reserve(steps + 1);
    auto record = [&](double t) {
        run.time.push_back(t);
        run.cavity_photons.push_back(r.photon_norm * std::norm(state.omega_cav));
        run.atom_excitation.push_back(excitation_count(m, ens, state.coherence));
        run.emitted.push_back(state.emitted_photons);
    };
    record(0.0);
    for (std::size_t s = 0; s < steps; ++s) {
        state = evolve_cavity(m, state, ens, tr, dt);
        record(static_cast<double>(s + 1) * dt);
    }

    run.efficiency = state.emitted_photons / n0;
    const double rate = r.broadening > 0.0 ? 2.0 * r.broadening : 0.0;
    run.survival_offmatched = std::exp(-pulse_duration * rate);
    return run;
}

}  // namespace qmem
