#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "qmem/grid.hpp"

namespace qmem {

using cplx = std::complex<double>;

// What a complex envelope samples. Carriers are always factored out; the
// envelope kind records which physical axis the samples live on so that
// mismatched combinations fail loudly instead of silently.
enum class EnvelopeKind {
    signal_in_time,  // slowly varying field amplitude at a fixed plane, vs t
    signal_in_z,     // field amplitude snapshot along the cloud, vs z
    coherence_in_z,  // ground-state coherence (spin wave) along the cloud, vs z
};

struct ComplexEnvelope {
    Grid1D grid;
    std::vector<cplx> values;
    EnvelopeKind kind = EnvelopeKind::signal_in_time;

    ComplexEnvelope() = default;
    ComplexEnvelope(const Grid1D& g, EnvelopeKind k)
        : grid(g), values(g.count, cplx{0.0, 0.0}), kind(k) {}
    ComplexEnvelope(const Grid1D& g, std::vector<cplx> v, EnvelopeKind k)
        : grid(g), values(std::move(v)), kind(k) {
        if (values.size() != grid.count)
            throw ConfigError("ComplexEnvelope: value count does not match grid");
    }

    std::size_t size() const { return values.size(); }

    // Sum of |A|^2 dx, the envelope's L2 weight on its own axis.
    double power_integral() const {
        double s = 0.0;
        for (const cplx& v : values) s += std::norm(v);
        return s * grid.step;
    }
};

}  // namespace qmem
