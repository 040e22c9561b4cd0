#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rollcast/errors.hpp"
#include "rollcast/features.hpp"

namespace rollcast {

/// Non-owning row-major view of a numeric design matrix. Learners consume
/// this so they stay independent of how the rows were produced.
struct RowMatrix {
    const double* data = nullptr;
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;

    double at(std::size_t r, std::size_t c) const { return data[r * n_cols + c]; }
    std::span<const double> row(std::size_t r) const { return {data + r * n_cols, n_cols}; }

    static RowMatrix of(const FeatureMatrix& m) { return {m.data.data(), m.rows(), m.cols()}; }
    static RowMatrix of(const std::vector<double>& flat, std::size_t rows, std::size_t cols) {
        return {flat.data(), rows, cols};
    }

    bool all_finite() const {
        for (std::size_t i = 0; i < n_rows * n_cols; ++i)
            if (!std::isfinite(data[i])) return false;
        return true;
    }
};

}  // namespace rollcast
