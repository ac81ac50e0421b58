#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <vector>

namespace peerpred {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntMatrix = Eigen::MatrixXi;

inline Matrix matrix_from_rows(const std::vector<std::vector<double>>& rows) {
    const auto r = static_cast<Eigen::Index>(rows.size());
    const auto c = r == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.front().size());
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return m;
}

template <typename Derived>
std::vector<std::vector<typename Derived::Scalar>> matrix_to_rows(const Eigen::MatrixBase<Derived>& m) {
    std::vector<std::vector<typename Derived::Scalar>> rows(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        auto& row = rows[static_cast<std::size_t>(i)];
        row.reserve(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    }
    return rows;
}

inline bool is_symmetric(const Matrix& m, double tol) {
    if (m.rows() != m.cols()) return false;
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace peerpred
