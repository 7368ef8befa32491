#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "qmem/array2d.hpp"
#include "qmem/constants.hpp"
#include "qmem/envelope.hpp"
#include "qmem/fourier.hpp"

namespace qmem {

// Chronocyclic (or space-wavevector) quasiprobability of a complex envelope.
// Rows follow xgrid, columns follow kgrid. The k axis is sampled at half the
// conjugate-grid spacing because the transform runs over the two-point
// correlation A(x+s)A*(x-s) whose lag variable advances in steps of 2 dx.
struct WignerMap {
    Array2D<double> values;
    Grid1D xgrid;
    Grid1D kgrid;
    EnvelopeKind kind = EnvelopeKind::signal_in_time;
};

// Builds the map from a sampled envelope, normalising the input to unit
// power first so that the distribution integrates to one. The column sums
// times dk reproduce |A(x)|^2 of the normalised input exactly; the row sums
// times dx reproduce the spectral density provided the envelope is band
// limited to half the grid Nyquist (the correlation trick aliases spectral
// weight from beyond that).
inline WignerMap wigner(const ComplexEnvelope& env) {
    const std::size_t n = env.size();
    if (n < 2) throw ConfigError("wigner map needs at least two samples");
    const double power = env.power_integral();
    if (!(power > 0.0) || !std::isfinite(power))
        throw NumericError("wigner map of an empty or non-finite envelope");

    const double dx = env.grid.step;
    const double scale = 1.0 / std::sqrt(power);
    std::vector<cplx> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = env.values[i] * scale;

    const std::size_t half = n / 2;
    const double dk = (0.5 * two_pi) / (static_cast<double>(n) * dx);
    Grid1D kgrid(-dk * static_cast<double>(half), dk, n);

    WignerMap map{Array2D<double>(n, n), env.grid, kgrid, env.kind};
    std::vector<cplx> row(n);
    const double weight = dx / (0.5 * two_pi);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(row.begin(), row.end(), cplx{0.0, 0.0});
        const long long ii = static_cast<long long>(i);
        for (long long j = -static_cast<long long>(half); j < static_cast<long long>(half); ++j) {
            const long long up = ii + j;
            const long long dn = ii - j;
            if (up < 0 || dn < 0 || up >= static_cast<long long>(n) || dn >= static_cast<long long>(n))
                continue;
            row[static_cast<std::size_t>((j + static_cast<long long>(n)) % static_cast<long long>(n))] =
                a[static_cast<std::size_t>(up)] * std::conj(a[static_cast<std::size_t>(dn)]);
        }
        detail::raw_fft(row, FFTW_FORWARD);
        for (std::size_t c = 0; c < n; ++c)
            map.values.at(i, c) = row[(c + half) % n].real() * weight;
    }
    return map;
}

}  // namespace qmem
