#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "qmem/adiabatic.hpp"
#include "qmem/constants.hpp"
#include "qmem/coupling.hpp"
#include "qmem/ensemble.hpp"
#include "qmem/envelope.hpp"
#include "qmem/excitation.hpp"
#include "qmem/grid.hpp"
#include "qmem/rotation.hpp"

// 1+1D Maxwell-Bloch memory integrator in the co-moving frame t' = t - z/c.
// Per time slice the ground-state coherence picks up its local phases and
// losses, then the signal field marches through the cloud exchanging
// excitations with each cell through an exactly unitary rotation whose angle
// follows the per-cell optical depth. The field equation is an ODE in z per
// slice; retardation across the cloud is dropped (cloud << c dt), as is
// transverse diffraction (the transverse physics enters via phase masks).

namespace qmem {

struct SolverConfig {
    double detuning = 0.0;  // single-photon detuning of the reference level, rad/s
    double dt = 0.0;        // s
    double dz = 0.0;        // m, must match the ensemble grid step
    double t_start = 0.0;   // s
    double t_end = 0.0;     // s
    bool include_spont_loss = true;  // keeps iGamma in denominators and the gamma decay
    GradientSchedule zeeman_gradient{};
    // Additional excited levels on top of the reference one (detuning,
    // dipole ratio r); each contributes its source terms scaled by r^2.
    std::vector<ExcitedLevel> extra_levels{};
    bool strang_splitting = false;   // symmetrized local steps (default plain Lie)
    std::size_t snapshot_stride = 0;  // keep every n-th coherence snapshot; 0 = none
};

struct MemoryState {
    ComplexEnvelope coherence;  // rho_gh over z
    double time = 0.0;
};

struct Trajectory {
    Grid1D tgrid;
    ComplexEnvelope output_signal;  // field exiting the far face, over t
    MemoryState final_state;
    std::vector<std::pair<double, ComplexEnvelope>> snapshots;
    // Per-slice diagnostics, all per unit beam area:
    std::vector<double> time;
    std::vector<double> n_atoms;            // spin-wave excitations in the cloud
    std::vector<double> n_photons_out;      // cumulative photons emitted
    std::vector<double> n_photons_pending;  // input photons not yet injected
    bool lossless = false;
    std::vector<std::string> warnings;
};

namespace detail {

struct LevelSums {
    double inv4  = 0.0;   // sum r^2 / (4 Delta)           (exchange)
    cplx disp{0.0, 0.0};  // sum r^2 / (2 Delta + i Gamma)  (field dispersion/absorption)
    double stark_per_o2 = 0.0;  // d(delta_acS)/d|Omega_c|^2
    double gamma_per_o2 = 0.0;  // d(gamma)/d|Omega_c|^2
};

inline LevelSums level_sums(const SolverConfig& cfg, double gamma_tr) {
    const double ge = cfg.include_spont_loss ? gamma_tr : 0.0;
    std::vector<ExcitedLevel> levels{{cfg.detuning, 1.0}};
    levels.insert(levels.end(), cfg.extra_levels.begin(), cfg.extra_levels.end());
    LevelSums s;
    for (const ExcitedLevel& lv : levels) {
        if (lv.detuning == 0.0)
            throw ConfigError("run_memory: zero single-photon detuning");
        const double r2 = lv.dipole_ratio * lv.dipole_ratio;
        s.inv4 += r2 / (4.0 * lv.detuning);
        s.disp += r2 / cplx(2.0 * lv.detuning, ge);
        const double den = ge * ge + 4.0 * lv.detuning * lv.detuning;
        s.stark_per_o2 += -lv.detuning * r2 / den;
        s.gamma_per_o2 += 0.5 * ge * r2 / den;
    }
    return s;
}

}  // namespace detail

inline Trajectory run_memory(const AtomEnsemble& ens, const Transition& tr,
                             const CouplingDrive& drive, const ComplexEnvelope& input_signal,
                             const SolverConfig& cfg, const MemoryState& initial) {
    const PhysConsts pc{};
    const std::size_t nz = ens.grid.count;
    if (cfg.dt <= 0) throw ConfigError("run_memory: dt must be positive");
    if (std::abs(cfg.dz - ens.grid.step) > 1e-12 * ens.grid.step)
        throw ConfigError("run_memory: cfg.dz must equal the ensemble grid step");
    const double span = cfg.t_end - cfg.t_start;
    const auto nt = static_cast<std::size_t>(std::llround(span / cfg.dt));
    if (nt < 2) throw ConfigError("run_memory: t_span shorter than two slices");
    Grid1D tgrid(cfg.t_start, cfg.dt, nt);

    if (initial.coherence.kind != EnvelopeKind::coherence_in_z ||
        initial.coherence.size() != nz)
        throw ConfigError("run_memory: initial coherence does not match the ensemble grid");

    const bool have_input = !input_signal.values.empty();
    if (have_input) {
        if (input_signal.kind != EnvelopeKind::signal_in_time)
            throw ConfigError("run_memory: input must be a signal-in-time envelope");
        if (input_signal.size() != nt ||
            std::abs(input_signal.grid.step - cfg.dt) > 1e-9 * cfg.dt ||
            std::abs(input_signal.grid.start - cfg.t_start) > 1e-6 * cfg.dt)
            throw ConfigError("run_memory: input grid does not match the t_span grid");
    }

    const detail::LevelSums ls = detail::level_sums(cfg, tr.gamma);

    // Per-cell constants.
    const double dz = ens.grid.step;
    std::vector<double> sqrt_dod(nz), s_atom(nz);
    std::vector<cplx> disp_factor(nz), kphase(nz);
    const double od_per_n = 2.0 * tr.k0 * tr.dipole * tr.dipole * dz / (pc.hbar * pc.eps0 * tr.gamma);
    const double disp_per_n = tr.k0 * tr.dipole * tr.dipole * dz / (pc.hbar * pc.eps0);
    double max_dod = 0.0;
    for (std::size_t i = 0; i < nz; ++i) {
        const double dod = od_per_n * ens.density[i];
        max_dod = std::max(max_dod, dod);
        sqrt_dod[i] = std::sqrt(dod);
        s_atom[i] = std::sqrt(ens.density[i] * dz);
        disp_factor[i] = std::exp(cplx(0.0, -1.0) * disp_per_n * ens.density[i] * ls.disp);
        kphase[i] = std::polar(1.0, drive.k_mismatch * ens.grid.coord(i));
    }

    // Stability: per-cell exchange angle must stay small for the splitting
    // to hold; reject configurations past 0.1 rad.
    const double alpha_bound =
        std::abs(drive.amplitude * ls.inv4) * std::sqrt(tr.gamma * max_dod * cfg.dt);
    if (alpha_bound > 0.1)
        throw ConfigError("run_memory: per-cell rotation angle " + std::to_string(alpha_bound) +
                          " rad exceeds the 0.1 rad stability bound; reduce dt or coupling");

    Trajectory traj;
    traj.tgrid = tgrid;
    traj.lossless = !cfg.include_spont_loss;
    traj.output_signal = ComplexEnvelope(tgrid, EnvelopeKind::signal_in_time);
    if (std::abs(cfg.detuning) < 10.0 * tr.gamma)
        traj.warnings.push_back("single-photon detuning below 10 Gamma; adiabatic elimination degraded");

    std::vector<cplx> rho = initial.coherence.values;

    const double w_ph = photon_weight(tr);
    const double s_ph = std::sqrt(w_ph * cfg.dt);

    double pending = 0.0;
    if (have_input)
        for (const cplx& v : input_signal.values) pending += w_ph * cfg.dt * std::norm(v);
    double out_cum = 0.0;

    traj.time.reserve(nt);
    traj.n_atoms.reserve(nt);
    traj.n_photons_out.reserve(nt);
    traj.n_photons_pending.reserve(nt);

    const double atom_total = ens.column_density();  // for the excitation-fraction monitor
    double max_rho = 0.0, max_frac = 0.0;

    for (std::size_t j = 0; j < nt; ++j) {
        const double t = tgrid.coord(j);
        const double oc = drive.rabi(t);
        const double o2 = oc * oc;
        const double delta = drive.delta(t);
        const double beta = cfg.zeeman_gradient.beta(t);
        const double stark = ls.stark_per_o2 * o2;
        const double gamma_pb = ls.gamma_per_o2 * o2;

        // (a) local two-photon phase and gradient phase, (b) power-broadening
        // decay; atom-only, done for the whole slice up front. With Strang
        // splitting enabled, half now and half after the field march.
        const int halves = cfg.strang_splitting ? 2 : 1;
        const double frac = 1.0 / static_cast<double>(halves);
        auto apply_local = [&]() {
            const double ph0 = -(delta - stark + beta * ens.grid.start) * cfg.dt * frac;
            const cplx step0 = std::polar(std::exp(-gamma_pb * cfg.dt * frac), ph0);
            const cplx ratio = std::polar(1.0, -beta * dz * cfg.dt * frac);
            cplx p = step0;
            for (std::size_t i = 0; i < nz; ++i) {
                rho[i] *= p;
                p *= ratio;
            }
        };
        apply_local();

        // Field march through the cloud: exchange rotation then
        // dispersion/absorption, cell by cell.
        cplx field = have_input ? input_signal.values[j] : cplx{0.0, 0.0};
        pending -= w_ph * cfg.dt * std::norm(field);
        if (oc != 0.0) {
            const cplx alpha_scalar =
                cplx(0.0, 1.0) * oc * ls.inv4 * std::sqrt(tr.gamma * cfg.dt);
            for (std::size_t i = 0; i < nz; ++i) {
                const cplx a = alpha_scalar * sqrt_dod[i] * kphase[i];
                const double mag = std::abs(a);
                if (mag > 0.0) {
                    const cplx e = a / mag;
                    const double cs = std::cos(mag), sn = std::sin(mag);
                    const cplx u1 = rho[i] * s_atom[i];
                    const cplx u2 = std::conj(field) * s_ph;
                    rho[i] = (cs * u1 + sn * e * u2) / s_atom[i];
                    field = std::conj((-sn * std::conj(e) * u1 + cs * u2) / s_ph);
                }
                field *= disp_factor[i];
            }
        } else {
            for (std::size_t i = 0; i < nz; ++i) field *= disp_factor[i];
        }
        if (cfg.strang_splitting) apply_local();

        traj.output_signal.values[j] = field;
        out_cum += w_ph * cfg.dt * std::norm(field);

        double nat = 0.0, rr_max = 0.0;
        for (std::size_t i = 0; i < nz; ++i) {
            const double r2 = std::norm(rho[i]);
            nat += ens.density[i] * r2;
            rr_max = std::max(rr_max, r2);
        }
        nat *= dz;
        max_rho = std::max(max_rho, std::sqrt(rr_max));
        if (atom_total > 0.0) max_frac = std::max(max_frac, nat / atom_total);

        if (!std::isfinite(nat) || !std::isfinite(std::abs(field)))
            throw NumericError("run_memory: NaN at slice " + std::to_string(j) + " (t = " +
                               std::to_string(t) + " s); last valid slice " +
                               std::to_string(j == 0 ? 0 : j - 1));

        traj.time.push_back(t);
        traj.n_atoms.push_back(nat);
        traj.n_photons_out.push_back(out_cum);
        traj.n_photons_pending.push_back(pending > 0.0 ? pending : 0.0);

        if (cfg.snapshot_stride > 0 && j % cfg.snapshot_stride == 0)
            traj.snapshots.emplace_back(
                t, ComplexEnvelope(ens.grid, rho, EnvelopeKind::coherence_in_z));
    }

    if (max_rho > 1.0)
        traj.warnings.push_back("coherence left the physical range: max |rho| = " +
                                std::to_string(max_rho));
    else if (max_rho > 0.1)
        traj.warnings.push_back("weak-excitation monitor: max |rho| = " +
                                std::to_string(max_rho));
    if (max_frac > 0.1)
        traj.warnings.push_back("population transfer reached " + std::to_string(max_frac * 100.0) +
                                "% of the ensemble; excited-state population no longer negligible");

    traj.final_state.coherence = ComplexEnvelope(ens.grid, std::move(rho), EnvelopeKind::coherence_in_z);
    traj.final_state.time = cfg.t_start + static_cast<double>(nt) * cfg.dt;
    return traj;
}

// Maximum relative drift of the total excitation number over a lossless run.
inline double conservation_residual(const Trajectory& traj) {
    if (!traj.lossless)
        throw ConfigError("conservation_residual: trajectory was computed with losses enabled");
    if (traj.time.empty()) return 0.0;
    // Reference total: atoms + emitted + still-pending input, taken after the
    // first slice; under exact exchange unitarity this equals the pre-run
    // total (initial atoms + all input photons).
    const double base =
        traj.n_atoms.front() + traj.n_photons_out.front() + traj.n_photons_pending.front();
    double worst = 0.0;
    for (std::size_t j = 0; j < traj.time.size(); ++j) {
        const double tot = traj.n_atoms[j] + traj.n_photons_out[j] + traj.n_photons_pending[j];
        worst = std::max(worst, std::abs(tot - base));
    }
    return base > 0.0 ? worst / base : worst;
}

}  // namespace qmem
