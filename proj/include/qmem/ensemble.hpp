#pragma once

#include <cmath>
#include <vector>

#include "qmem/constants.hpp"
#include "qmem/grid.hpp"

namespace qmem {

// Cold atomic cloud sampled along the propagation axis. `density` holds the
// number density n(z_i) in m^-3 on `grid`; `od` is the resonant optical
// depth 2 k0 d^2 / (hbar eps0 Gamma) * integral of n dz for the reference
// transition, kept alongside so solvers can scale per-cell optical depths
// without re-deriving transition factors.
struct AtomEnsemble {
    Grid1D grid;                  // z axis, m
    std::vector<double> density;  // m^-3
    double length;                // cloud extent covered by the grid, m
    double od;                    // resonant optical depth (dimensionless)
    double temperature;           // K

    // Rectangle-rule column density; cells pair one-to-one with solver cells
    // so per-cell optical depths sum exactly to `od`.
    double column_density() const {
        double s = 0.0;
        for (double n : density) s += n;
        return s * grid.step;
    }
};

inline double optical_depth(const Transition& tr, double column_density) {
    const PhysConsts k{};
    return 2.0 * tr.k0 * tr.dipole * tr.dipole / (k.hbar * k.eps0 * tr.gamma) * column_density;
}

inline AtomEnsemble make_ensemble(const Grid1D& zgrid, std::vector<double> density,
                                  const Transition& tr, double temperature) {
    if (density.size() != zgrid.count)
        throw ConfigError("make_ensemble: density sample count does not match grid");
    for (double n : density)
        if (n < 0) throw ConfigError("make_ensemble: negative density");
    AtomEnsemble ens;
    ens.grid = zgrid;
    ens.density = std::move(density);
    ens.length = zgrid.extent();
    ens.temperature = temperature;
    ens.od = optical_depth(tr, ens.column_density());
    return ens;
}

inline AtomEnsemble uniform_ensemble(double length, std::size_t cells, double target_od,
                                     const Transition& tr, double temperature) {
    Grid1D g(0.0, length / static_cast<double>(cells), cells);
    const PhysConsts k{};
    const double ncol = target_od * k.hbar * k.eps0 * tr.gamma / (2.0 * tr.k0 * tr.dipole * tr.dipole);
    std::vector<double> n(cells, ncol / length);
    return make_ensemble(g, std::move(n), tr, temperature);
}

// Longitudinal profile used by the bundled scenarios: a flat-topped cloud
// exp(-z^4/(4 sigma^4)) centred in the grid.
inline AtomEnsemble super_gaussian_ensemble(double length, std::size_t cells, double sigma,
                                            double target_od, const Transition& tr,
                                            double temperature) {
    Grid1D g(0.0, length / static_cast<double>(cells), cells);
    std::vector<double> n(cells);
    const double zc = 0.5 * length;
    double colsum = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
        const double z = g.coord(i) - zc;
        n[i] = std::exp(-std::pow(z, 4) / (4.0 * std::pow(sigma, 4)));
        colsum += n[i] * g.step;
    }
    const PhysConsts k{};
    const double ncol = target_od * k.hbar * k.eps0 * tr.gamma / (2.0 * tr.k0 * tr.dipole * tr.dipole);
    for (double& v : n) v *= ncol / colsum;
    return make_ensemble(g, std::move(n), tr, temperature);
}

}  // namespace qmem
