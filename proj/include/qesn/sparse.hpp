#pragma once

#include "qesn/common.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace qesn {

/// Compressed sparse row matrix; the reservoir matrices are ~90% zeros.
struct CsrMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_ptr{0};
    std::vector<std::size_t> col_idx;
    std::vector<double> values;

    std::size_t nnz() const { return values.size(); }

    /// y = alpha * A x + y
    void multiply_add(std::span<const double> x, double alpha, std::span<double> y) const;

    Matrix to_dense() const;
    static CsrMatrix from_dense(const Matrix& dense);
};

}  // namespace qesn
