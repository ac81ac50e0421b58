#pragma once

#include "oracles.hpp"
#include "peerpred/peerpred.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace fixtures {

using peerpred::JointSignalModel;
using peerpred::Matrix;

inline oracle::Grid grid(const Matrix& m) {
    oracle::Grid g(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
    return g;
}

inline oracle::Grid grid(const std::vector<std::vector<int>>& m) {
    oracle::Grid g;
    for (const auto& row : m) g.emplace_back(row.begin(), row.end());
    return g;
}

inline std::vector<std::vector<int>> int_grid(const peerpred::IntMatrix& m) {
    std::vector<std::vector<int>> g(static_cast<std::size_t>(m.rows()), std::vector<int>(static_cast<std::size_t>(m.cols())));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
    return g;
}

inline JointSignalModel example_model() {
    return JointSignalModel::create(peerpred::matrix_from_rows({{0.4, 0.15}, {0.15, 0.3}}));
}

/// Joint = Delta + 1/n^2; valid whenever Delta has zero row/column sums and entries >= -1/n^2.
inline JointSignalModel uniform_marginal_world(const Matrix& delta) {
    const double n = static_cast<double>(delta.rows());
    Matrix joint = delta.array() + 1.0 / (n * n);
    return JointSignalModel::create(joint);
}

/// Two 2x2 diagonal-heavy blocks; signals 1,2 and 3,4 share sign rows.
inline Matrix clustered_delta() {
    return peerpred::matrix_from_rows({{0.05, 0.03, -0.04, -0.04},
                                       {0.03, 0.05, -0.04, -0.04},
                                       {-0.04, -0.04, 0.05, 0.03},
                                       {-0.04, -0.04, 0.03, 0.05}});
}

inline JointSignalModel clustered_world() { return uniform_marginal_world(clustered_delta()); }

/// Sign(Delta) is a row-cyclic pattern invariant under p = swap(1,2), q = swap(2,3).
inline Matrix paired_delta() {
    return peerpred::matrix_from_rows({{-0.03, 0.07, -0.04}, {-0.05, -0.02, 0.07}, {0.08, -0.05, -0.03}});
}

inline JointSignalModel paired_world() { return uniform_marginal_world(paired_delta()); }

/// The impossibility family, scaled so the joint's smallest cell is 1/18 under uniform marginals.
inline Matrix impossibility_delta(double x, double y) {
    const double s = x + y;
    Matrix d = peerpred::matrix_from_rows({{x, y, -s}, {y, x, -s}, {-s, -s, 2 * s}});
    return d / (18.0 * s);
}

inline JointSignalModel impossibility_world(double x, double y) { return uniform_marginal_world(impossibility_delta(x, y)); }

inline JointSignalModel ordinal_world(std::size_t n = 5, double strength = 1.0) {
    return peerpred::generate_world({peerpred::OrdinalBanded{n, strength}, 0});
}

inline double min_abs(const Matrix& m) { return m.cwiseAbs().minCoeff(); }

/// Categorical worlds: even draws are noisy-observation worlds with random q and prior, odd draws
/// are Dirichlet worlds rejected until Sign(Delta) is the identity.
inline JointSignalModel random_categorical(std::uint64_t seed, std::size_t n) {
    peerpred::Rng rng = peerpred::make_rng(seed, "fixture-categorical");
    if (seed % 2 == 0) {
        const double lo = 1.0 / static_cast<double>(n);
        std::uniform_real_distribution<double> qd(lo + 0.05, 1.0);
        std::uniform_real_distribution<double> pd(0.2, 1.0);
        std::vector<double> prior(n);
        double total = 0.0;
        for (auto& p : prior) total += (p = pd(rng));
        for (auto& p : prior) p /= total;
        return peerpred::generate_world({peerpred::NoisyObservation{n, qd(rng), prior}, rng()});
    }
    for (;;) {
        auto world = peerpred::generate_world({peerpred::RandomDirichlet{n, 1.0, (rng() & 1) == 0}, rng()});
        if (peerpred::classify(world).categorical) return world;
    }
}

/// Exchangeable worlds whose Delta has no entry within 1e-6 of zero and whose sign is not the identity.
inline JointSignalModel random_symmetric_noncategorical(std::uint64_t seed, std::size_t n) {
    peerpred::Rng rng = peerpred::make_rng(seed, "fixture-noncategorical");
    for (;;) {
        auto world = peerpred::generate_world({peerpred::RandomDirichlet{n, 1.0, true}, rng()});
        const auto d = peerpred::delta_of(world);
        if (min_abs(d.values()) <= 1e-6) continue;
        if (!peerpred::sign_of(d).is_identity()) return world;
    }
}

}  // namespace fixtures
