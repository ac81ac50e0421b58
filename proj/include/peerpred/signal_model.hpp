#pragma once

#include "peerpred/errors.hpp"
#include "peerpred/matrix.hpp"
#include "peerpred/tolerances.hpp"

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace peerpred {

/// Joint distribution P(S1=i, S2=j) over n signals. Immutable once built.
class JointSignalModel {
public:
    static JointSignalModel create(Matrix joint, std::vector<std::string> labels = {},
                                   double prob_tol = kDefaultTolerances.prob) {
        if (joint.rows() != joint.cols()) {
            throw ValidationError("joint: matrix must be square, got " + std::to_string(joint.rows()) + "x" +
                                  std::to_string(joint.cols()));
        }
        if (joint.rows() < 2) throw ValidationError("n: signal count must be at least 2");
        if (!joint.allFinite()) throw ValidationError("joint: entries must be finite");
        for (Eigen::Index i = 0; i < joint.rows(); ++i) {
            for (Eigen::Index j = 0; j < joint.cols(); ++j) {
                if (joint(i, j) < -prob_tol) {
                    std::ostringstream os;
                    os << "joint: entry (" << i + 1 << "," << j + 1 << ") is negative (" << joint(i, j) << ")";
                    throw ValidationError(os.str());
                }
            }
        }
        const double total = joint.sum();
        if (std::abs(total - 1.0) > prob_tol) {
            std::ostringstream os;
            os << "joint: entries sum to " << total << ", expected 1";
            throw ValidationError(os.str());
        }
        if (!labels.empty() && labels.size() != static_cast<std::size_t>(joint.rows())) {
            throw ValidationError("labels: expected " + std::to_string(joint.rows()) + " labels, got " +
                                  std::to_string(labels.size()));
        }
        return JointSignalModel(std::move(joint), std::move(labels));
    }

    std::size_t n() const noexcept { return static_cast<std::size_t>(joint_.rows()); }
    const Matrix& joint() const noexcept { return joint_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    /// P(S1 = i)
    Vector marginal1() const { return joint_.rowwise().sum(); }
    /// P(S2 = j)
    Vector marginal2() const { return joint_.colwise().sum().transpose(); }

    bool exchangeable(double tol = kDefaultTolerances.prob) const { return is_symmetric(joint_, tol); }

private:
    JointSignalModel(Matrix joint, std::vector<std::string> labels)
        : joint_(std::move(joint)), labels_(std::move(labels)) {}

    Matrix joint_;
    std::vector<std::string> labels_;
};

/// Delta = joint minus product of marginals. Rows and columns sum to zero.
class DeltaMatrix {
public:
    static DeltaMatrix from_matrix(Matrix delta, double prob_tol = kDefaultTolerances.prob,
                                   double zero_tol = kDefaultTolerances.sign) {
        if (delta.rows() != delta.cols() || delta.rows() < 1) {
            throw ValidationError("delta: matrix must be square and non-empty");
        }
        if (!delta.allFinite()) throw ValidationError("delta: entries must be finite");
        for (Eigen::Index i = 0; i < delta.rows(); ++i) {
            if (std::abs(delta.row(i).sum()) > prob_tol) {
                throw ValidationError("delta: row " + std::to_string(i + 1) + " does not sum to zero");
            }
            if (std::abs(delta.col(i).sum()) > prob_tol) {
                throw ValidationError("delta: column " + std::to_string(i + 1) + " does not sum to zero");
            }
        }
        return DeltaMatrix(std::move(delta), zero_tol);
    }

    std::size_t n() const noexcept { return static_cast<std::size_t>(delta_.rows()); }
    const Matrix& values() const noexcept { return delta_; }
    double operator()(std::size_t i, std::size_t j) const {
        return delta_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    double zero_tolerance() const noexcept { return zero_tol_; }

    bool symmetric(double tol = kDefaultTolerances.prob) const { return is_symmetric(delta_, tol); }

    /// True when some entry is within the zero tolerance (sign ambiguous).
    bool has_zero_entries() const { return (delta_.cwiseAbs().array() <= zero_tol_).any(); }

    /// Sum of the strictly positive entries; the truthful score under CA.
    double positive_mass() const { return (delta_.array() > zero_tol_).select(delta_.array(), 0.0).sum(); }

private:
    DeltaMatrix(Matrix delta, double zero_tol) : delta_(std::move(delta)), zero_tol_(zero_tol) {}

    Matrix delta_;
    double zero_tol_;
};

/// Sign(Delta): 1 where the entry is positive, 0 otherwise.
struct SignStructure {
    IntMatrix sign;

    std::size_t n() const noexcept { return static_cast<std::size_t>(sign.rows()); }
    bool is_identity() const { return sign == IntMatrix::Identity(sign.rows(), sign.cols()); }
    bool operator==(const SignStructure&) const = default;
};

struct ClusterWitness {
    enum class Axis { row, column };
    Axis axis;
    std::size_t first;
    std::size_t second;
};

/// Permutation maps p, q (signal -> relabelled signal) with S(p(i), q(j)) = S(i, j), p != q.
struct PermutationPair {
    std::vector<std::size_t> p;
    std::vector<std::size_t> q;
};

struct WorldClassification {
    bool categorical = false;
    bool clustered_signals = false;
    std::optional<ClusterWitness> cluster_witness;
    bool paired_permutations = false;
    std::optional<PermutationPair> permutation_witness;
    bool stochastically_relevant = false;
    bool has_zero_delta_entries = false;
    bool exchangeable = false;
};

inline constexpr std::size_t kPermutationSearchCap = 8;

inline DeltaMatrix delta_of(const JointSignalModel& model, const Tolerances& tol = kDefaultTolerances) {
    const Vector p1 = model.marginal1();
    const Vector p2 = model.marginal2();
    Matrix delta = model.joint() - p1 * p2.transpose();
    return DeltaMatrix::from_matrix(std::move(delta), tol.prob, tol.sign);
}

/// Sign of an arbitrary real matrix (used for empirical estimates that are not exact Deltas).
inline SignStructure sign_of(const Matrix& values, double sign_tol) {
    return SignStructure{(values.array() > sign_tol).cast<int>().matrix()};
}

inline SignStructure sign_of(const DeltaMatrix& delta) { return sign_of(delta.values(), delta.zero_tolerance()); }

inline std::optional<ClusterWitness> find_clustered(const SignStructure& s) {
    const auto n = static_cast<Eigen::Index>(s.n());
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = a + 1; b < n; ++b) {
            if (s.sign.row(a) == s.sign.row(b)) {
                return ClusterWitness{ClusterWitness::Axis::row, static_cast<std::size_t>(a),
                                      static_cast<std::size_t>(b)};
            }
        }
    }
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = a + 1; b < n; ++b) {
            if (s.sign.col(a) == s.sign.col(b)) {
                return ClusterWitness{ClusterWitness::Axis::column, static_cast<std::size_t>(a),
                                      static_cast<std::size_t>(b)};
            }
        }
    }
    return std::nullopt;
}

/// Searches all row relabellings p; for each, the column relabellings q with S(p(i), q(j)) = S(i, j)
/// are exactly the bijections matching column j of S to an equal column of the row-permuted S.
inline std::optional<PermutationPair> find_paired_permutation(const SignStructure& s,
                                                              std::size_t cap = kPermutationSearchCap) {
    const std::size_t n = s.n();
    if (n > cap) throw CapExceededError("paired-permutation search: n=" + std::to_string(n) + " exceeds cap", cap);

    auto column_key = [&](const IntMatrix& m, std::size_t c) {
        std::vector<int> key(n);
        for (std::size_t r = 0; r < n; ++r) key[r] = m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        return key;
    };

    std::vector<std::vector<int>> original_cols(n);
    for (std::size_t c = 0; c < n; ++c) original_cols[c] = column_key(s.sign, c);

    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    IntMatrix permuted(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    do {
        // permuted(i, c) = S(p(i), c)
        for (std::size_t i = 0; i < n; ++i) permuted.row(static_cast<Eigen::Index>(i)) = s.sign.row(static_cast<Eigen::Index>(p[i]));

        std::map<std::vector<int>, std::vector<std::size_t>> available;
        for (std::size_t c = 0; c < n; ++c) available[column_key(permuted, c)].push_back(c);

        std::vector<std::size_t> q(n);
        bool ok = true;
        std::map<std::vector<int>, std::size_t> used;
        for (std::size_t j = 0; j < n && ok; ++j) {
            auto it = available.find(original_cols[j]);
            auto& k = used[original_cols[j]];
            if (it == available.end() || k >= it->second.size()) {
                ok = false;
                break;
            }
            q[j] = it->second[k++];
        }
        if (!ok) continue;
        if (q != p) return PermutationPair{p, q};
        // q == p; any class with two interchangeable columns yields a distinct q.
        for (const auto& [key, cols] : available) {
            if (cols.size() >= 2) {
                auto q2 = q;
                auto a = std::find(q2.begin(), q2.end(), cols[0]);
                auto b = std::find(q2.begin(), q2.end(), cols[1]);
                std::iter_swap(a, b);
                return PermutationPair{p, q2};
            }
        }
    } while (std::next_permutation(p.begin(), p.end()));
    return std::nullopt;
}

/// For every pair of signals s' != s'', some conditional P(S1 | S2 = .) differs, and symmetrically.
/// Signals with zero marginal have undefined conditionals and fail the check.
inline bool stochastically_relevant(const JointSignalModel& model, double tol = kDefaultTolerances.prob) {
    const Matrix& joint = model.joint();
    const Vector p1 = model.marginal1();
    const Vector p2 = model.marginal2();
    const auto n = joint.rows();
    if ((p1.array() <= tol).any() || (p2.array() <= tol).any()) return false;

    Matrix cond_given2(n, n);  // column j: P(S1 = . | S2 = j)
    Matrix cond_given1(n, n);  // row i:    P(S2 = . | S1 = i)
    for (Eigen::Index j = 0; j < n; ++j) cond_given2.col(j) = joint.col(j) / p2(j);
    for (Eigen::Index i = 0; i < n; ++i) cond_given1.row(i) = joint.row(i) / p1(i);

    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = a + 1; b < n; ++b) {
            if ((cond_given2.col(a) - cond_given2.col(b)).cwiseAbs().maxCoeff() <= tol) return false;
            if ((cond_given1.row(a) - cond_given1.row(b)).cwiseAbs().maxCoeff() <= tol) return false;
        }
    }
    return true;
}

inline WorldClassification classify(const JointSignalModel& model, const Tolerances& tol = kDefaultTolerances,
                                    std::size_t permutation_cap = kPermutationSearchCap) {
    const DeltaMatrix delta = delta_of(model, tol);
    const SignStructure sign = sign_of(delta);

    WorldClassification out;
    out.categorical = sign.is_identity();
    out.cluster_witness = find_clustered(sign);
    out.clustered_signals = out.cluster_witness.has_value();
    out.permutation_witness = find_paired_permutation(sign, permutation_cap);
    out.paired_permutations = out.permutation_witness.has_value();
    out.stochastically_relevant = stochastically_relevant(model, tol.prob);
    out.has_zero_delta_entries = delta.has_zero_entries();
    out.exchangeable = model.exchangeable(tol.prob);
    return out;
}

}  // namespace peerpred
