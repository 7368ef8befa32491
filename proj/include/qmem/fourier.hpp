#pragma once

#include <fftw3.h>

#include <map>
#include <mutex>

#include "qmem/envelope.hpp"

// Unitary discrete Fourier transforms with centred conjugate grids.
// Forward kernel is exp(-i k x); the conjugate grid has step
// 2*pi/(count*step) and runs from -step*floor(count/2) upward, so spectra
// come out in natural (monotone) frequency order. Parseval holds exactly:
// sum |A|^2 = sum |A~|^2.
//
// FFTW does the heavy lifting; plans are created with FFTW_ESTIMATE only,
// which keeps results bit-reproducible across runs, and cached per
// (size, direction) behind a mutex. fftw_execute_dft on distinct buffers is
// thread-safe once the plan exists.

namespace qmem {
namespace detail {

inline fftw_plan plan_for(std::size_t n, int sign) {
    static std::mutex mu;
    static std::map<std::pair<std::size_t, int>, fftw_plan> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(n, sign);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::vector<cplx> scratch(n);
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), p, p, sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    cache.emplace(key, plan);
    return plan;
}

inline void raw_fft(std::vector<cplx>& data, int sign) {
    fftw_plan plan = plan_for(data.size(), sign);
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, p, p);
}

}  // namespace detail

// Forward transform onto grid.conjugate(). The envelope kind is preserved:
// the kind names the physical object, the grid says which domain samples it.
inline ComplexEnvelope dft(const ComplexEnvelope& a) {
    const std::size_t n = a.size();
    const Grid1D kgrid = a.grid.conjugate();
    const std::size_t half = n / 2;

    // exp(-i k_m x_j) with k_m = (m - half) dk, x_j = x0 + j dx splits into
    // the raw FFT kernel exp(-i 2pi m j / n), an input twiddle
    // exp(+i 2pi half j / n) and an output twiddle exp(-i k_m x0).
    std::vector<cplx> work(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double ang = two_pi * static_cast<double>(half) * static_cast<double>(j) /
                           static_cast<double>(n);
        work[j] = a.values[j] * std::polar(1.0, ang);
    }
    detail::raw_fft(work, FFTW_FORWARD);
    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    ComplexEnvelope out(kgrid, a.kind);
    for (std::size_t m = 0; m < n; ++m) {
        const double km = kgrid.coord(m);
        out.values[m] = work[m] * std::polar(norm, -km * a.grid.start);
    }
    return out;
}

// Inverse transform back onto `target`, which must be the grid the spectrum
// was produced from (target.conjugate() == spectrum.grid).
inline ComplexEnvelope idft(const ComplexEnvelope& spec, const Grid1D& target) {
    const std::size_t n = spec.size();
    if (target.count != n) throw ConfigError("idft: target grid count mismatch");
    const Grid1D expect = target.conjugate();
    const double dk = expect.step;
    if (std::abs(expect.step - spec.grid.step) > 1e-12 * dk ||
        std::abs(expect.start - spec.grid.start) > 1e-9 * dk)
        throw ConfigError("idft: spectrum grid is not conjugate to target");

    const std::size_t half = n / 2;
    std::vector<cplx> work(n);
    for (std::size_t m = 0; m < n; ++m) {
        const double km = spec.grid.coord(m);
        work[m] = spec.values[m] * std::polar(1.0, km * target.start);
    }
    detail::raw_fft(work, FFTW_BACKWARD);
    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    ComplexEnvelope out(target, spec.kind);
    for (std::size_t j = 0; j < n; ++j) {
        const double ang = -two_pi * static_cast<double>(half) * static_cast<double>(j) /
                           static_cast<double>(n);
        out.values[j] = work[j] * std::polar(norm, ang);
    }
    return out;
}

}  // namespace qmem
