#include "qesn/sparse.hpp"

namespace qesn {

void CsrMatrix::multiply_add(std::span<const double> x, double alpha,
                             std::span<double> y) const {
    if (x.size() != cols || y.size() != rows)
        throw DimensionError("CsrMatrix::multiply_add: operand size mismatch");
    for (std::size_t i = 0; i < rows; ++i) {
        double acc = 0.0;
        for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) acc += values[k] * x[col_idx[k]];
        y[i] += alpha * acc;
    }
}

Matrix CsrMatrix::to_dense() const {
    Matrix dense = Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
            dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col_idx[k])) = values[k];
    return dense;
}

CsrMatrix CsrMatrix::from_dense(const Matrix& dense) {
    CsrMatrix m;
    m.rows = static_cast<std::size_t>(dense.rows());
    m.cols = static_cast<std::size_t>(dense.cols());
    m.row_ptr.assign(1, 0);
    for (Eigen::Index i = 0; i < dense.rows(); ++i) {
        for (Eigen::Index j = 0; j < dense.cols(); ++j) {
            if (dense(i, j) != 0.0) {
                m.col_idx.push_back(static_cast<std::size_t>(j));
                m.values.push_back(dense(i, j));
            }
        }
        m.row_ptr.push_back(m.values.size());
    }
    return m;
}

}  // namespace qesn
