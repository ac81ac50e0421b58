#pragma once

#include "peerpred/errors.hpp"
#include "peerpred/matrix.hpp"
#include "peerpred/parallel.hpp"
#include "peerpred/rng.hpp"
#include "peerpred/scoring.hpp"
#include "peerpred/signal_model.hpp"
#include "peerpred/simulation.hpp"
#include "peerpred/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace peerpred {

/// Empirical Delta estimates from two disjoint halves of the tasks.
struct SplitEstimate {
    std::size_t n = 0;
    TaskBatch half_a;
    TaskBatch half_b;
    std::vector<std::string> dropped;  ///< tasks removed to make halves equal
    Matrix joint_a, joint_b;           ///< report-pair frequencies on bonus tasks
    Vector marg_a, marg_b;             ///< report frequencies on penalty tasks, one sample each
    Matrix gamma_a, gamma_b;           ///< joint - marg * marg^T
};

namespace detail {

template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_halves(std::vector<T> items, Rng& rng,
                                                       std::vector<std::string>& dropped) {
    std::shuffle(items.begin(), items.end(), rng);
    if (items.size() % 2 == 1) {
        dropped.push_back(items.back().id);
        items.pop_back();
    }
    const auto mid = items.begin() + static_cast<std::ptrdiff_t>(items.size() / 2);
    return {std::vector<T>(items.begin(), mid), std::vector<T>(mid, items.end())};
}

inline void estimate_half(const TaskBatch& half, std::size_t n, Matrix& joint, Vector& marg, Matrix& gamma) {
    const auto k = static_cast<Eigen::Index>(n);
    joint = Matrix::Zero(k, k);
    marg = Vector::Zero(k);
    for (const auto& t : half.bonus) joint(static_cast<Eigen::Index>(t.report1), static_cast<Eigen::Index>(t.report2)) += 1.0;
    joint /= static_cast<double>(half.bonus.size());
    for (const auto& t : half.penalty1) marg(static_cast<Eigen::Index>(t.report)) += 1.0;
    for (const auto& t : half.penalty2) marg(static_cast<Eigen::Index>(t.report)) += 1.0;
    marg /= static_cast<double>(half.penalty1.size() + half.penalty2.size());
    gamma = joint - marg * marg.transpose();
}

}  // namespace detail

/// Randomly halves the bonus tasks and each agent's penalty tasks (an odd count drops one task at
/// random), then estimates Gamma per half. Never-reported signals leave zero rows/columns in Gamma.
inline SplitEstimate estimate_split(const TaskBatch& reports, std::size_t n, Rng& split_rng) {
    if (reports.bonus.size() < 2 || reports.penalty1.size() < 2 || reports.penalty2.size() < 2) {
        throw ValidationError("split estimate: need at least 2 bonus tasks and 2 penalty tasks per agent, got " +
                              std::to_string(reports.bonus.size()) + " bonus, " +
                              std::to_string(reports.penalty1.size()) + " + " +
                              std::to_string(reports.penalty2.size()) + " penalty");
    }
    reports.validate(n);

    SplitEstimate est;
    est.n = n;
    auto [bonus_a, bonus_b] = detail::split_halves(reports.bonus, split_rng, est.dropped);
    auto [p1_a, p1_b] = detail::split_halves(reports.penalty1, split_rng, est.dropped);
    auto [p2_a, p2_b] = detail::split_halves(reports.penalty2, split_rng, est.dropped);
    est.half_a = TaskBatch{std::move(bonus_a), std::move(p1_a), std::move(p2_a)};
    est.half_b = TaskBatch{std::move(bonus_b), std::move(p1_b), std::move(p2_b)};
    detail::estimate_half(est.half_a, n, est.joint_a, est.marg_a, est.gamma_a);
    detail::estimate_half(est.half_b, n, est.joint_b, est.marg_b, est.gamma_b);
    return est;
}

/// Swapped score matrices: half A is scored with Sign(Gamma^B) and vice versa.
inline std::pair<ScoreMatrix, ScoreMatrix> ca_df_scores(const SplitEstimate& est,
                                                        double sign_tol = kDefaultTolerances.sign) {
    return {ScoreMatrix::ca(sign_of(est.gamma_b, sign_tol)), ScoreMatrix::ca(sign_of(est.gamma_a, sign_tol))};
}

struct CaDfRun {
    PaymentRecord payments_a;
    PaymentRecord payments_b;
    SplitEstimate estimate;
    ScoreMatrix score_a;
    ScoreMatrix score_b;

    double total() const { return payments_a.total + payments_b.total; }
    std::size_t bonus_tasks() const {
        return payments_a.per_bonus_task.size() + payments_b.per_bonus_task.size();
    }
};

/// Scores an existing report batch with the detail-free mechanism.
inline CaDfRun ca_df_pay(const TaskBatch& reports, std::size_t n, Rng& rng, PenaltyMode mode = PenaltyMode::sampled) {
    SplitEstimate est = estimate_split(reports, n, rng);
    auto [sa, sb] = ca_df_scores(est);
    PaymentRecord pa = pay_batch(est.half_a, sa, rng, mode);
    PaymentRecord pb = pay_batch(est.half_b, sb, rng, mode);
    return CaDfRun{std::move(pa), std::move(pb), std::move(est), std::move(sa), std::move(sb)};
}

/// m shared (bonus) tasks plus m penalty singles per agent, sampled from the model.
inline TaskBatch sample_ca_df_reports(const JointSignalModel& model, const MixedStrategy& f, const MixedStrategy& g,
                                      std::size_t m, Rng& rng) {
    if (m < 4) throw ValidationError("ca-df: m must be at least 4, got " + std::to_string(m));
    const AssignmentPlan plan = make_plan(m, m, m, rng);
    return simulate(model, f, g, plan, rng);
}

inline CaDfRun run_ca_df(const JointSignalModel& model, const MixedStrategy& f, const MixedStrategy& g,
                         std::size_t m, Rng& rng, PenaltyMode mode = PenaltyMode::sampled) {
    const TaskBatch reports = sample_ca_df_reports(model, f, g, m, rng);
    return ca_df_pay(reports, model.n(), rng, mode);
}

struct ConvergenceTrial {
    std::size_t trial = 0;
    bool sign_correct = false;
    double gap = 0.0;        ///< E(S*, I, I) - E(S_A, I, I) against the true Delta
    double gap_bound = 0.0;  ///< sum |Delta - Gamma^B|
};

struct ConvergenceReport {
    std::size_t n = 0;
    std::size_t m = 0;
    double epsilon = 0.0;
    double delta = 0.0;
    std::size_t trials = 0;
    double empirical_prob_sign_correct = 0.0;
    double empirical_gap = 0.0;          ///< max gap over trials
    double fraction_within_epsilon = 0.0;
    std::size_t gap_bound_violations = 0;
    std::size_t optimality_violations = 0;  ///< trials where S_A beat S* under truthful play
    bool pass = false;
    std::vector<ConvergenceTrial> rows;
};

struct ConvergenceOptions {
    std::size_t threads = 1;
    double sign_tol = kDefaultTolerances.sign;
};

/// For each m, estimates Sign(Delta) from truthful reports `trials` times and measures the
/// truthful-score gap of the learned matrix analytically. Per-trial seeds derive from (seed, m, trial).
inline std::vector<ConvergenceReport> convergence_experiment(const JointSignalModel& model, double epsilon,
                                                             double delta_conf,
                                                             const std::vector<std::size_t>& m_schedule,
                                                             std::size_t trials, std::uint64_t seed,
                                                             const ConvergenceOptions& opt = {}) {
    if (trials == 0) throw ValidationError("convergence: trials must be positive");
    if (!(epsilon > 0.0)) throw ValidationError("convergence: epsilon must be positive");
    if (!(delta_conf > 0.0 && delta_conf < 1.0)) throw ValidationError("convergence: delta must lie in (0, 1)");
    if (m_schedule.empty()) throw ValidationError("convergence: empty m schedule");
    for (auto m : m_schedule) {
        if (m < 4) throw ValidationError("convergence: every m must be at least 4, got " + std::to_string(m));
    }

    const std::size_t n = model.n();
    const DeltaMatrix truth = delta_of(model);
    const SignStructure true_sign = sign_of(truth);
    const Matrix& d = truth.values();
    const MixedStrategy honest = MixedStrategy::truthful(n);
    const double best = (d.array() * true_sign.sign.cast<double>().array()).sum();

    std::vector<ConvergenceReport> reports;
    for (auto m : m_schedule) {
        ConvergenceReport rep;
        rep.n = n;
        rep.m = m;
        rep.epsilon = epsilon;
        rep.delta = delta_conf;
        rep.trials = trials;
        rep.rows.resize(trials);
        const std::uint64_t m_seed = derive_seed(seed, "converge-m", m);
        parallel_for(trials, opt.threads, [&](std::size_t t) {
            Rng rng = make_rng(m_seed, "trial", t);
            const TaskBatch data = sample_ca_df_reports(model, honest, honest, m, rng);
            const SplitEstimate est = estimate_split(data, n, rng);
            const SignStructure learned = sign_of(est.gamma_b, opt.sign_tol);
            ConvergenceTrial row;
            row.trial = t;
            row.sign_correct = learned == true_sign;
            row.gap = best - (d.array() * learned.sign.cast<double>().array()).sum();
            row.gap_bound = (d - est.gamma_b).cwiseAbs().sum();
            rep.rows[t] = row;
        });

        std::size_t correct = 0, within = 0;
        for (const auto& row : rep.rows) {
            correct += row.sign_correct;
            within += row.gap <= epsilon;
            rep.empirical_gap = std::max(rep.empirical_gap, row.gap);
            // Slack covers entries that sit inside the sign tolerance of zero.
            const double slack = static_cast<double>(n * n) * opt.sign_tol;
            rep.gap_bound_violations += row.gap > row.gap_bound + slack;
            rep.optimality_violations += row.gap < -slack;
        }
        rep.empirical_prob_sign_correct = static_cast<double>(correct) / static_cast<double>(trials);
        rep.fraction_within_epsilon = static_cast<double>(within) / static_cast<double>(trials);
        rep.pass = rep.fraction_within_epsilon >= 1.0 - delta_conf;
        reports.push_back(std::move(rep));
    }
    return reports;
}

}  // namespace peerpred
