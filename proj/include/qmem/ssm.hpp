#pragma once

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <vector>

#include "qmem/array2d.hpp"
#include "qmem/constants.hpp"
#include "qmem/memory.hpp"

namespace qmem {

// Spatially shaped far-detuned beam imprinting phase on the stored coherence.
// The intensity map is sampled over (y, z); a memory run sees one y row.
struct StarkMask {
    Array2D<double> intensity;   // W/m^2
    double duration;             // s
    double phase_per_intensity;  // rad per (W/m^2 * s)
    double noise_rel_sigma;      // sigma_I / I0, pixelwise

    StarkMask(Array2D<double> i, double t, double ppi, double noise = 0.0)
        : intensity(std::move(i)), duration(t), phase_per_intensity(ppi),
          noise_rel_sigma(noise) {
        if (duration < 0.0) throw ConfigError("mask duration must be nonnegative");
        if (noise_rel_sigma < 0.0) throw ConfigError("relative noise must be nonnegative");
        for (double v : intensity.data)
            if (!(v >= 0.0)) throw ConfigError("mask intensity must be nonnegative");
    }
};

// Applies the mask row at y_index along the coherence's z axis.
inline MemoryState imprint_phase(const MemoryState& state, const StarkMask& mask,
                                 std::size_t y_index) {
    if (y_index >= mask.intensity.rows) throw ConfigError("mask row selection out of range");
    if (mask.intensity.cols != state.coherence.size())
        throw ConfigError("mask columns must match the coherence grid");
    MemoryState out = state;
    for (std::size_t i = 0; i < out.coherence.size(); ++i) {
        const double phi =
            mask.phase_per_intensity * mask.duration * mask.intensity.at(y_index, i);
        out.coherence.values[i] *= std::polar(1.0, phi);
    }
    return out;
}

// Readout intensity after averaging the imprint over intensity noise:
// exp(-gamma * phi0^2) with gamma = (sigma_I/I0)^2.
inline std::vector<double> dephasing_envelope(const StarkMask& mask,
                                              const std::vector<double>& phi0) {
    const double gamma = mask.noise_rel_sigma * mask.noise_rel_sigma;
    std::vector<double> env(phi0.size());
    for (std::size_t i = 0; i < phi0.size(); ++i)
        env[i] = std::exp(-gamma * phi0[i] * phi0[i]);
    return env;
}

// Overlap of two readout intensity patterns. Pixels below 2% of each image's
// maximum are treated as background and zeroed before comparing.
inline double fidelity(const Array2D<double>& i_d, const Array2D<double>& i_a) {
    if (!i_d.same_shape(i_a)) throw ConfigError("fidelity images must share a shape");
    double dmax = 0.0, amax = 0.0;
    for (double v : i_d.data) dmax = std::max(dmax, v);
    for (double v : i_a.data) amax = std::max(amax, v);
    if (dmax <= 0.0 || amax <= 0.0) throw NumericError("fidelity undefined for empty images");
    double cross = 0.0, dd = 0.0, aa = 0.0;
    for (std::size_t i = 0; i < i_d.size(); ++i) {
        const double d = i_d.data[i] >= 0.02 * dmax ? i_d.data[i] : 0.0;
        const double a = i_a.data[i] >= 0.02 * amax ? i_a.data[i] : 0.0;
        cross += std::sqrt(d * a);
        dd += d;
        aa += a;
    }
    if (dd <= 0.0 || aa <= 0.0) throw NumericError("fidelity undefined for empty images");
    return cross / std::sqrt(dd * aa);
}

// Transverse carrier of the interferogram, rad per pixel.
struct Carrier2D {
    double kx = 0.0;
    double ky = 0.0;

    double magnitude() const { return std::sqrt(kx * kx + ky * ky); }
};

struct FringeImage {
    Array2D<double> intensity;  // camera counts over (y rows, x cols)
    Carrier2D carrier;
    double reference_amp;

    FringeImage(Array2D<double> img, Carrier2D k0, double a0)
        : intensity(std::move(img)), carrier(k0), reference_amp(a0) {
        for (double v : intensity.data)
            if (!(v >= 0.0)) throw ConfigError("fringe intensity must be nonnegative");
    }
};

namespace detail {

inline void fft2_inplace(std::vector<cplx>& buf, std::size_t rows, std::size_t cols,
                         int sign) {
    static std::mutex plan_mutex;
    fftw_complex* ptr = reinterpret_cast<fftw_complex*>(buf.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(plan_mutex);
        plan = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), ptr, ptr,
                                sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(plan_mutex);
        fftw_destroy_plan(plan);
    }
}

}  // namespace detail

// Camera image of the stored field interfering with a tilted reference:
// |h + A0 exp(i K0.r)|^2, with r in pixel units.
inline FringeImage synthesize_fringes(const Array2D<cplx>& h, double reference_amp,
                                      Carrier2D carrier) {
    const double periods =
        carrier.magnitude() * std::max(h.rows, h.cols) / two_pi;
    if (periods < 4.0)
        throw ConfigError("carrier must lay down at least four fringe periods");
    Array2D<double> img(h.rows, h.cols);
    for (std::size_t r = 0; r < h.rows; ++r)
        for (std::size_t c = 0; c < h.cols; ++c) {
            const cplx ref = std::polar(reference_amp,
                                        carrier.kx * static_cast<double>(c) +
                                            carrier.ky * static_cast<double>(r));
            img.at(r, c) = std::norm(h.at(r, c) + ref);
        }
    return FringeImage(std::move(img), carrier, reference_amp);
}

// Recovers h from an off-axis interferogram: 2D transform, rectangular window
// (half-width |K0|/2 per axis) around the sideband that carries h rather than
// its conjugate, inverse transform, carrier and reference divided out.
inline Array2D<cplx> demodulate(const FringeImage& img) {
    const std::size_t rows = img.intensity.rows, cols = img.intensity.cols;
    const double k0 = img.carrier.magnitude();
    if (k0 <= 0.0) throw ConfigError("demodulation needs a nonzero carrier");

    std::vector<cplx> buf(rows * cols);
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = img.intensity.data[i];
    detail::fft2_inplace(buf, rows, cols, FFTW_FORWARD);

    // Under the e^{-ik.r} kernel the A0*h cross term sits at -K0.
    const double cx = -img.carrier.kx * static_cast<double>(cols) / two_pi;
    const double cy = -img.carrier.ky * static_cast<double>(rows) / two_pi;
    const double hwx = 0.5 * k0 * static_cast<double>(cols) / two_pi;
    const double hwy = 0.5 * k0 * static_cast<double>(rows) / two_pi;
    if (hwx < 1.0 || hwy < 1.0)
        throw ConfigError("carrier too slow: sideband window is narrower than one bin");

    auto wrap = [](double v, std::size_t n) {
        double w = std::fmod(v, static_cast<double>(n));
        if (w < 0.0) w += static_cast<double>(n);
        return w;
    };
    const double wcx = wrap(cx, cols), wcy = wrap(cy, rows);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            // Distance to the window center on the periodic frequency grid.
            double dx = std::abs(static_cast<double>(c) - wcx);
            dx = std::min(dx, static_cast<double>(cols) - dx);
            double dy = std::abs(static_cast<double>(r) - wcy);
            dy = std::min(dy, static_cast<double>(rows) - dy);
            if (dx > hwx || dy > hwy) buf[r * cols + c] = 0.0;
        }

    detail::fft2_inplace(buf, rows, cols, FFTW_BACKWARD);
    Array2D<cplx> out(rows, cols);
    const double norm = 1.0 / static_cast<double>(rows * cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const cplx ref = std::polar(img.reference_amp,
                                        -(img.carrier.kx * static_cast<double>(c) +
                                          img.carrier.ky * static_cast<double>(r)));
            out.at(r, c) = buf[r * cols + c] * norm / ref;
        }
    return out;
}

// Far-field 1/e^2 radius of a Gaussian readout mode exp(-y^2/w^2) carrying a
// net quadratic phase from the physical lens plus the imprinted one. The
// Fourier lens maps spatial frequency to position on the camera.
inline double farfield_waist(double phase_lens_power, double stark_lens_power,
                             double cloud_waist, double wavelength,
                             double fourier_focal = 0.1) {
    if (cloud_waist <= 0.0 || wavelength <= 0.0 || fourier_focal <= 0.0)
        throw ConfigError("waist, wavelength and focal length must be positive");
    const double p = phase_lens_power + stark_lens_power;
    const double diff = wavelength * fourier_focal / (0.5 * two_pi * cloud_waist);
    const double geom = fourier_focal * cloud_waist * p;
    return std::sqrt(diff * diff + geom * geom);
}

}  // namespace qmem
