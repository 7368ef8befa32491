#pragma once

#include <cstddef>
#include <vector>

#include "qmem/constants.hpp"

namespace qmem {

// Dense row-major 2D array. Rows index the slow axis.
template <class T>
struct Array2D {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data;

    Array2D() = default;
    Array2D(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), data(r * c, fill) {
        if (r == 0 || c == 0) throw ConfigError("array dimensions must be positive");
    }

    T& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const T& at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::size_t size() const { return data.size(); }

    bool same_shape(const Array2D& other) const {
        return rows == other.rows && cols == other.cols;
    }
};

}  // namespace qmem
