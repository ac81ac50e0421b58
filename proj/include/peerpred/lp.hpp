#pragma once

#include "peerpred/matrix.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

namespace peerpred::lp {

enum class Status { optimal, unbounded, iteration_limit };

struct Result {
    Status status = Status::iteration_limit;
    Vector x;
    double objective = 0.0;
    std::size_t iterations = 0;
};

/// Dense tableau simplex for   max c^T x   s.t.   A x <= b,  x >= 0,  with b >= 0.
/// The slack basis is feasible at the origin, so no phase one is needed. Bland's rule
/// prevents cycling on the degenerate (b_i = 0) rows that the truthfulness cuts produce.
/// The final vertex is recomputed from the original columns of the optimal basis, so rounding
/// accumulated over many pivots does not leak into x.
inline Result maximize(const Matrix& A, const Vector& b, const Vector& c, std::size_t max_iterations = 100000,
                       double eps = 1e-12, double pivot_tol = 1e-9) {
    const Eigen::Index rows = A.rows();
    const Eigen::Index vars = A.cols();
    const Eigen::Index rhs = vars + rows;

    Matrix T = Matrix::Zero(rows + 1, vars + rows + 1);
    T.topLeftCorner(rows, vars) = A;
    T.block(0, vars, rows, rows) = Matrix::Identity(rows, rows);
    T.col(rhs).head(rows) = b;
    T.row(rows).head(vars) = -c.transpose();

    std::vector<Eigen::Index> basis(static_cast<std::size_t>(rows));
    for (Eigen::Index i = 0; i < rows; ++i) basis[static_cast<std::size_t>(i)] = vars + i;

    Result result;
    for (result.iterations = 0; result.iterations < max_iterations; ++result.iterations) {
        Eigen::Index enter = -1;
        for (Eigen::Index j = 0; j < rhs; ++j) {
            if (T(rows, j) < -eps) {
                enter = j;
                break;
            }
        }
        if (enter < 0) {
            result.status = Status::optimal;
            break;
        }

        Eigen::Index leave = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double a = T(i, enter);
            if (a <= pivot_tol) continue;
            const double ratio = T(i, rhs) / a;
            if (ratio < best_ratio - eps ||
                (ratio <= best_ratio + eps && leave >= 0 &&
                 basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
                best_ratio = ratio;
                leave = i;
            }
        }
        if (leave < 0) {
            result.status = Status::unbounded;
            return result;
        }

        T.row(leave) /= T(leave, enter);
        for (Eigen::Index i = 0; i <= rows; ++i) {
            if (i == leave) continue;
            const double factor = T(i, enter);
            if (factor != 0.0) T.row(i) -= factor * T.row(leave);
        }
        basis[static_cast<std::size_t>(leave)] = enter;
    }
    if (result.status != Status::optimal) return result;

    Matrix B(rows, rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto var = basis[static_cast<std::size_t>(i)];
        B.col(i) = var < vars ? Vector(A.col(var)) : Vector(Vector::Unit(rows, var - vars));
    }
    const Vector xb = B.partialPivLu().solve(b);
    result.x = Vector::Zero(vars);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto var = basis[static_cast<std::size_t>(i)];
        if (var < vars) result.x(var) = std::max(0.0, xb(i));
    }
    result.objective = c.dot(result.x);
    return result;
}

}  // namespace peerpred::lp
