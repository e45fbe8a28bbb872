#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sigver/error.hpp"

namespace sigver {

/// Dense row-major matrix. Feature matrices are stored as float (the on-disk
/// dtype); boosting and the combiner work on the double variant.
template <typename T>
struct RowMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data;

    RowMatrix() = default;
    RowMatrix(std::size_t r, std::size_t c, T fill = T{})
        : rows(r), cols(c), data(r * c, fill) {}

    T& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const T& at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<T> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const T> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool operator==(const RowMatrix&) const = default;
};

using FeatureMatrix = RowMatrix<float>;

inline RowMatrix<double> widen(const FeatureMatrix& m) {
    RowMatrix<double> out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.data.size(); ++i) out.data[i] = m.data[i];
    return out;
}

} // namespace sigver
