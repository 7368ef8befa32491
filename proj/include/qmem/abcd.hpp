#pragma once

#include <cmath>

#include "qmem/constants.hpp"
#include "qmem/envelope.hpp"
#include "qmem/fourier.hpp"

namespace qmem {

// Ray-optics transfer matrix acting on (t, omega/omega0) for temporal beams
// or (x, k/k0) for spatial ones. Symplectic by construction.
struct RayTransform {
    double a, b, c, d;

    RayTransform(double a_, double b_, double c_, double d_) : a(a_), b(b_), c(c_), d(d_) {
        if (std::abs(a * d - b * c - 1.0) > 1e-12)
            throw ConfigError("ray transform must have unit determinant");
    }
};

inline RayTransform lens(double f) {
    if (f == 0.0) throw ConfigError("lens focal length must be nonzero");
    return RayTransform(1.0, 0.0, -1.0 / f, 1.0);
}

inline RayTransform propagation(double d) { return RayTransform(1.0, d, 0.0, 1.0); }

// Matrix product; `second` acts on the beam first.
inline RayTransform compose(const RayTransform& first, const RayTransform& second) {
    return RayTransform(first.a * second.a + first.b * second.c,
                        first.a * second.b + first.b * second.d,
                        first.c * second.a + first.d * second.c,
                        first.c * second.b + first.d * second.d);
}

enum class QuadraticKind { lens, propagation };

// Applies one stage of quadratic-phase optics to a sampled envelope. A lens
// multiplies exp(-i carrier/(2f) u^2) in the direct domain (u measured from
// the grid centre); propagation multiplies exp(-i d/(2 carrier) w^2) on the
// transform grid. The fastest imposed fringe must keep at least four samples
// per period; the bound is checked at the outermost sample the envelope
// actually occupies, so empty grid margins do not forbid a transform.
inline ComplexEnvelope apply_quadratic_phase(const ComplexEnvelope& env, QuadraticKind kind,
                                             double focal_or_distance, double carrier) {
    if (carrier <= 0.0) throw ConfigError("carrier frequency must be positive");

    auto support_edge = [](const ComplexEnvelope& e, double center) {
        double peak = 0.0;
        for (const auto& v : e.values) peak = std::max(peak, std::abs(v));
        if (peak == 0.0) return 0.0;
        double edge = 0.0;
        for (std::size_t i = 0; i < e.size(); ++i)
            if (std::abs(e.values[i]) > 1e-9 * peak)
                edge = std::max(edge, std::abs(e.grid.coord(i) - center));
        return edge;
    };

    if (kind == QuadraticKind::lens) {
        const double f = focal_or_distance;
        if (f == 0.0) throw ConfigError("lens focal length must be nonzero");
        const double center = env.grid.coord(env.grid.count / 2);
        const double edge = support_edge(env, center);
        if (std::abs(carrier * edge / f) * env.grid.step > 0.25 * two_pi)
            throw NumericError("lens phase undersampled: fewer than four points per fringe");
        ComplexEnvelope out = env;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double u = out.grid.coord(i) - center;
            out.values[i] *= std::polar(1.0, -carrier * u * u / (2.0 * f));
        }
        return out;
    }

    ComplexEnvelope spec = dft(env);
    const double edge = support_edge(spec, 0.0);
    const double dist = focal_or_distance;
    if (std::abs(dist * edge / carrier) * spec.grid.step > 0.25 * two_pi)
        throw NumericError("propagation phase undersampled: fewer than four points per fringe");
    for (std::size_t m = 0; m < spec.size(); ++m) {
        const double w = spec.grid.coord(m);
        spec.values[m] *= std::polar(1.0, -dist * w * w / (2.0 * carrier));
    }
    return idft(spec, env.grid);
}

}  // namespace qmem
