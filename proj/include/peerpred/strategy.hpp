#pragma once

#include "peerpred/errors.hpp"
#include "peerpred/matrix.hpp"
#include "peerpred/tolerances.hpp"

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace peerpred {

/// Signal -> report map. Signals and reports are 0-based indices in the library API.
struct DeterministicStrategy {
    std::vector<std::size_t> report_for;

    static DeterministicStrategy identity(std::size_t n) {
        DeterministicStrategy s{std::vector<std::size_t>(n)};
        std::iota(s.report_for.begin(), s.report_for.end(), std::size_t{0});
        return s;
    }

    static DeterministicStrategy constant(std::size_t n, std::size_t report) {
        return DeterministicStrategy{std::vector<std::size_t>(n, report)};
    }

    std::size_t n() const noexcept { return report_for.size(); }
    std::size_t operator[](std::size_t signal) const { return report_for[signal]; }

    bool is_valid() const {
        return !report_for.empty() &&
               std::all_of(report_for.begin(), report_for.end(), [&](std::size_t r) { return r < n(); });
    }

    bool is_permutation() const {
        std::vector<bool> seen(n(), false);
        for (auto r : report_for) {
            if (r >= n() || seen[r]) return false;
            seen[r] = true;
        }
        return true;
    }

    bool is_uninformed() const {
        return std::adjacent_find(report_for.begin(), report_for.end(), std::not_equal_to<>{}) == report_for.end();
    }
    bool is_informed() const { return !is_uninformed(); }
    bool is_truthful() const { return *this == identity(n()); }

    /// Number of signals not reported as themselves.
    std::size_t deviations() const {
        std::size_t d = 0;
        for (std::size_t i = 0; i < n(); ++i) d += report_for[i] != i;
        return d;
    }

    bool operator==(const DeterministicStrategy&) const = default;
};

/// Row-stochastic matrix, entry (i, r) = P(report r | signal i).
class MixedStrategy {
public:
    static MixedStrategy create(Matrix m, double prob_tol = kDefaultTolerances.prob) {
        if (m.rows() != m.cols() || m.rows() < 1) throw ValidationError("strategy: matrix must be square");
        if ((m.array() < -prob_tol).any()) throw ValidationError("strategy: negative probability");
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (std::abs(m.row(i).sum() - 1.0) > prob_tol) {
                throw ValidationError("strategy: row " + std::to_string(i + 1) + " does not sum to 1");
            }
        }
        return MixedStrategy(std::move(m));
    }

    static MixedStrategy from(const DeterministicStrategy& d) {
        const auto n = static_cast<Eigen::Index>(d.n());
        Matrix m = Matrix::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) m(i, static_cast<Eigen::Index>(d[static_cast<std::size_t>(i)])) = 1.0;
        return MixedStrategy(std::move(m));
    }

    static MixedStrategy truthful(std::size_t n) { return from(DeterministicStrategy::identity(n)); }

    /// Element-wise average of several strategies (the per-task uniform equivalent of a schedule).
    static MixedStrategy average(const std::vector<MixedStrategy>& parts) {
        if (parts.empty()) throw ValidationError("strategy: cannot average an empty schedule");
        Matrix acc = Matrix::Zero(parts.front().matrix().rows(), parts.front().matrix().cols());
        for (const auto& p : parts) acc += p.matrix();
        return MixedStrategy(acc / static_cast<double>(parts.size()));
    }

    std::size_t n() const noexcept { return static_cast<std::size_t>(m_.rows()); }
    const Matrix& matrix() const noexcept { return m_; }

    bool is_uninformed(double tol = kDefaultTolerances.prob) const {
        for (Eigen::Index i = 1; i < m_.rows(); ++i) {
            if ((m_.row(i) - m_.row(0)).cwiseAbs().maxCoeff() > tol) return false;
        }
        return true;
    }

private:
    explicit MixedStrategy(Matrix m) : m_(std::move(m)) {}
    Matrix m_;
};

}  // namespace peerpred
