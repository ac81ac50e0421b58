#pragma once

#include "peerpred/errors.hpp"
#include "peerpred/matrix.hpp"
#include "peerpred/rng.hpp"
#include "peerpred/signal_model.hpp"
#include "peerpred/strategy.hpp"

#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace peerpred {

/// Payment kernel S(r1, r2) on a report pair.
class ScoreMatrix {
public:
    static ScoreMatrix msdg(std::size_t n) {
        const auto k = static_cast<Eigen::Index>(n);
        return ScoreMatrix(Matrix::Identity(k, k));
    }

    static ScoreMatrix ca(const SignStructure& sign) { return ScoreMatrix(sign.sign.cast<double>()); }

    static ScoreMatrix custom(Matrix s) {
        if (s.rows() != s.cols() || s.rows() < 1) throw ValidationError("score: matrix must be square");
        if (!s.allFinite()) throw ValidationError("score: entries must be finite");
        return ScoreMatrix(std::move(s));
    }

    std::size_t n() const noexcept { return static_cast<std::size_t>(s_.rows()); }
    const Matrix& values() const noexcept { return s_; }
    double operator()(std::size_t r1, std::size_t r2) const {
        return s_(static_cast<Eigen::Index>(r1), static_cast<Eigen::Index>(r2));
    }
    bool is_binary() const { return ((s_.array() == 0.0) || (s_.array() == 1.0)).all(); }

private:
    explicit ScoreMatrix(Matrix s) : s_(std::move(s)) {}
    Matrix s_;
};

inline ScoreMatrix msdg_score(std::size_t n) { return ScoreMatrix::msdg(n); }
inline ScoreMatrix ca_score(const SignStructure& sign) { return ScoreMatrix::ca(sign); }

struct BonusTask {
    std::string id;
    std::size_t report1;
    std::size_t report2;
};

struct PenaltyTask {
    std::string id;
    std::size_t report;
};

/// Realised reports, already designated into bonus and per-agent penalty sets.
struct TaskBatch {
    std::vector<BonusTask> bonus;
    std::vector<PenaltyTask> penalty1;
    std::vector<PenaltyTask> penalty2;

    void validate(std::size_t n) const {
        if (bonus.empty()) throw ValidationError("batch: bonus set is empty");
        if (penalty1.empty()) throw ValidationError("batch: penalty set for agent 1 is empty");
        if (penalty2.empty()) throw ValidationError("batch: penalty set for agent 2 is empty");
        std::set<std::string> ids;
        auto add = [&](const std::string& id) {
            if (!ids.insert(id).second) throw ValidationError("batch: task id '" + id + "' appears in more than one set");
        };
        auto check = [&](std::size_t r, const std::string& id) {
            if (r >= n) {
                throw ValidationError("batch: report " + std::to_string(r + 1) + " on task '" + id +
                                      "' is outside 1.." + std::to_string(n));
            }
        };
        for (const auto& t : bonus) {
            add(t.id);
            check(t.report1, t.id);
            check(t.report2, t.id);
        }
        for (const auto& t : penalty1) {
            add(t.id);
            check(t.report, t.id);
        }
        for (const auto& t : penalty2) {
            add(t.id);
            check(t.report, t.id);
        }
    }
};

struct BonusPayment {
    std::string id;
    double score_on_bonus;
    double penalty_term;
    double net;
};

struct PaymentRecord {
    std::vector<BonusPayment> per_bonus_task;
    double total = 0.0;

    double mean_net() const {
        return per_bonus_task.empty() ? 0.0 : total / static_cast<double>(per_bonus_task.size());
    }
};

enum class PenaltyMode {
    sampled,    ///< one uniformly drawn (l, l') pair per bonus task, with replacement across bonus tasks
    all_pairs,  ///< average of S over every penalty pair
};

/// Multi-task payment: S on the bonus pair minus S on a cross-agent penalty pair, summed over bonus tasks.
inline PaymentRecord pay_batch(const TaskBatch& batch, const ScoreMatrix& s, Rng& rng,
                               PenaltyMode mode = PenaltyMode::sampled) {
    const std::size_t n = s.n();
    batch.validate(n);

    double all_pairs_penalty = 0.0;
    if (mode == PenaltyMode::all_pairs) {
        std::vector<double> c1(n, 0.0), c2(n, 0.0);
        for (const auto& t : batch.penalty1) c1[t.report] += 1.0;
        for (const auto& t : batch.penalty2) c2[t.report] += 1.0;
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) all_pairs_penalty += c1[a] * c2[b] * s(a, b);
        }
        all_pairs_penalty /= static_cast<double>(batch.penalty1.size() * batch.penalty2.size());
    }

    PaymentRecord record;
    record.per_bonus_task.reserve(batch.bonus.size());
    for (const auto& task : batch.bonus) {
        const double bonus = s(task.report1, task.report2);
        double penalty = all_pairs_penalty;
        if (mode == PenaltyMode::sampled) {
            const auto& l1 = batch.penalty1[uniform_index(rng, batch.penalty1.size())];
            const auto& l2 = batch.penalty2[uniform_index(rng, batch.penalty2.size())];
            penalty = s(l1.report, l2.report);
        }
        record.per_bonus_task.push_back({task.id, bonus, penalty, bonus - penalty});
        record.total += bonus - penalty;
    }
    return record;
}

namespace detail {

inline void require_same_n(std::size_t expected, std::size_t got, const char* what) {
    if (expected != got) {
        throw ValidationError(std::string("dimension mismatch: ") + what + " has " + std::to_string(got) +
                              " signals, expected " + std::to_string(expected));
    }
}

}  // namespace detail

/// E(F, G) = sum_ij Delta_ij sum_{r1, r2} S(r1, r2) F_{i r1} G_{j r2}, evaluated as the literal sum.
inline double expected_score(const DeltaMatrix& delta, const ScoreMatrix& s, const MixedStrategy& f,
                             const MixedStrategy& g) {
    const std::size_t n = delta.n();
    detail::require_same_n(n, s.n(), "score matrix");
    detail::require_same_n(n, f.n(), "strategy F");
    detail::require_same_n(n, g.n(), "strategy G");
    const Matrix& F = f.matrix();
    const Matrix& G = g.matrix();
    double total = 0.0;
    for (Eigen::Index i = 0; i < F.rows(); ++i) {
        for (Eigen::Index j = 0; j < G.rows(); ++j) {
            double inner = 0.0;
            for (Eigen::Index r1 = 0; r1 < F.cols(); ++r1) {
                if (F(i, r1) == 0.0) continue;
                for (Eigen::Index r2 = 0; r2 < G.cols(); ++r2) {
                    inner += s.values()(r1, r2) * F(i, r1) * G(j, r2);
                }
            }
            total += delta.values()(i, j) * inner;
        }
    }
    return total;
}

/// The same quantity in matrix form, tr(F^T Delta G S^T).
inline double expected_score_trace(const DeltaMatrix& delta, const ScoreMatrix& s, const MixedStrategy& f,
                                   const MixedStrategy& g) {
    detail::require_same_n(delta.n(), s.n(), "score matrix");
    detail::require_same_n(delta.n(), f.n(), "strategy F");
    detail::require_same_n(delta.n(), g.n(), "strategy G");
    return (f.matrix().transpose() * delta.values() * g.matrix() * s.values().transpose()).trace();
}

/// Deterministic form: E(F, G) = sum_ij Delta_ij S(F_i, G_j).
inline double expected_score_det(const DeltaMatrix& delta, const ScoreMatrix& s, const DeterministicStrategy& f,
                                 const DeterministicStrategy& g) {
    const std::size_t n = delta.n();
    detail::require_same_n(n, s.n(), "score matrix");
    detail::require_same_n(n, f.n(), "strategy F");
    detail::require_same_n(n, g.n(), "strategy G");
    if (!f.is_valid() || !g.is_valid()) throw ValidationError("strategy: report outside 1..n");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) total += delta(i, j) * s(f[i], g[j]);
    }
    return total;
}

}  // namespace peerpred
