#pragma once

#include <cstddef>

#include "qmem/constants.hpp"

namespace qmem {

// Uniform 1D sample grid. Works for time (s), position (m) or any conjugate
// axis; the unit is whatever the caller put into `step`.
struct Grid1D {
    double start = 0.0;
    double step = 0.0;
    std::size_t count = 0;

    Grid1D() = default;
    Grid1D(double start_, double step_, std::size_t count_)
        : start(start_), step(step_), count(count_) {
        if (count < 2) throw ConfigError("Grid1D: need at least 2 samples");
        if (step <= 0) throw ConfigError("Grid1D: step must be positive");
    }

    double coord(std::size_t i) const { return start + step * static_cast<double>(i); }
    double extent() const { return step * static_cast<double>(count); }

    // Conjugate (Fourier) grid: same count, step 2*pi/(count*step), zero
    // frequency first in FFT storage order. `start` is the most negative
    // frequency after fftshift-style reordering; we keep the grid in
    // natural order with start at -N/2 bins for even N, -(N-1)/2 for odd.
    Grid1D conjugate() const {
        const double dk = two_pi / (static_cast<double>(count) * step);
        const auto half = static_cast<double>(count / 2);
        return Grid1D(-dk * half, dk, count);
    }
};

}  // namespace qmem
