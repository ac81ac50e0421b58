#pragma once

#include "peerpred/errors.hpp"
#include "peerpred/matrix.hpp"
#include "peerpred/parallel.hpp"
#include "peerpred/rng.hpp"
#include "peerpred/scoring.hpp"
#include "peerpred/signal_model.hpp"
#include "peerpred/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace peerpred {

/// Each agent sees the true signal t with probability q, any other signal with (1-q)/(n-1).
struct NoisyObservation {
    std::size_t n = 2;
    double q = 0.8;
    std::vector<double> prior;  ///< empty means uniform
};

/// Synthetic: joint cells drawn from a flat Dirichlet. `symmetric` mirrors the upper triangle.
struct RandomDirichlet {
    std::size_t n = 2;
    double concentration = 1.0;
    bool symmetric = true;
};

/// Synthetic ordinal world: positive Delta on the tri-diagonal band, negative elsewhere. Needs n >= 4.
struct OrdinalBanded {
    std::size_t n = 5;
    double band_strength = 1.0;  ///< in (0, 1]; 1 puts the most negative joint cell at zero
};

struct ExplicitWorld {
    JointSignalModel model;
};

struct WorldGenerator {
    std::variant<NoisyObservation, RandomDirichlet, OrdinalBanded, ExplicitWorld> kind;
    std::uint64_t seed = 0;
};

namespace detail {

inline JointSignalModel make_world(const NoisyObservation& w, Rng&) {
    const std::size_t n = w.n;
    if (n < 2) throw ValidationError("noisy observation: n must be at least 2");
    if (!(w.q > 1.0 / static_cast<double>(n)) || w.q > 1.0) {
        throw ValidationError("noisy observation: q must lie in (1/n, 1], got " + std::to_string(w.q));
    }
    std::vector<double> prior = w.prior.empty() ? std::vector<double>(n, 1.0 / static_cast<double>(n)) : w.prior;
    if (prior.size() != n) throw ValidationError("noisy observation: prior has wrong length");
    const double err = (1.0 - w.q) / static_cast<double>(n - 1);
    auto obs = [&](std::size_t i, std::size_t t) { return i == t ? w.q : err; };
    const auto k = static_cast<Eigen::Index>(n);
    Matrix joint = Matrix::Zero(k, k);
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) joint(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += prior[t] * obs(i, t) * obs(j, t);
        }
    }
    return JointSignalModel::create(std::move(joint));
}

inline JointSignalModel make_world(const RandomDirichlet& w, Rng& rng) {
    const std::size_t n = w.n;
    if (n < 2) throw ValidationError("dirichlet world: n must be at least 2");
    if (!(w.concentration > 0.0)) throw ValidationError("dirichlet world: concentration must be positive");
    std::gamma_distribution<double> gamma(w.concentration, 1.0);
    const auto k = static_cast<Eigen::Index>(n);
    Matrix joint = Matrix::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = w.symmetric ? i : 0; j < k; ++j) {
            const double x = gamma(rng);
            if (w.symmetric && i != j) {
                joint(i, j) = joint(j, i) = 0.5 * x;
            } else {
                joint(i, j) = x;
            }
        }
    }
    joint /= joint.sum();
    return JointSignalModel::create(std::move(joint));
}

inline JointSignalModel make_world(const OrdinalBanded& w, Rng&) {
    const std::size_t n = w.n;
    if (n < 4) throw ValidationError("ordinal world: the tri-diagonal band needs n >= 4");
    if (!(w.band_strength > 0.0) || w.band_strength > 1.0) {
        throw ValidationError("ordinal world: band_strength must lie in (0, 1]");
    }
    // Off-band entries -3b, band off-diagonals +b, diagonal closes the row sum to zero.
    const double nn = static_cast<double>(n);
    const double b = w.band_strength / (3.0 * nn * nn);
    const auto k = static_cast<Eigen::Index>(n);
    Matrix delta = Matrix::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            if (i == j) continue;
            delta(i, j) = std::abs(i - j) == 1 ? b : -3.0 * b;
        }
        delta(i, i) = -delta.row(i).sum();
    }
    Matrix joint = delta.array() + 1.0 / (nn * nn);
    return JointSignalModel::create(std::move(joint));
}

inline JointSignalModel make_world(const ExplicitWorld& w, Rng&) { return w.model; }

}  // namespace detail

inline JointSignalModel generate_world(const WorldGenerator& gen) {
    Rng rng = make_rng(gen.seed, "world");
    return std::visit([&](const auto& kind) { return detail::make_world(kind, rng); }, gen.kind);
}

/// Which task is bonus / penalty, and the order in which each agent sees its tasks.
struct AssignmentPlan {
    std::size_t m = 0;
    std::vector<std::size_t> bonus_ids;
    std::vector<std::size_t> penalty1_ids;
    std::vector<std::size_t> penalty2_ids;
    std::vector<std::size_t> agent1_order;  ///< agent 1's tasks by position
    std::vector<std::size_t> agent2_order;  ///< agent 2's tasks reshuffled by a uniform permutation

    void validate() const {
        if (bonus_ids.empty() || penalty1_ids.empty() || penalty2_ids.empty()) {
            throw ValidationError("plan: bonus and both penalty sets must be non-empty");
        }
        std::vector<bool> used(m, false);
        for (const auto* set : {&bonus_ids, &penalty1_ids, &penalty2_ids}) {
            for (auto id : *set) {
                if (id >= m || used[id]) throw ValidationError("plan: task sets must be disjoint ids below m");
                used[id] = true;
            }
        }
        if (agent1_order.size() != bonus_ids.size() + penalty1_ids.size() ||
            agent2_order.size() != bonus_ids.size() + penalty2_ids.size()) {
            throw ValidationError("plan: agent task orders do not match the assigned sets");
        }
    }
};

/// Random designation of `bonus`, `penalty1`, `penalty2` tasks out of m = their sum.
inline AssignmentPlan make_plan(std::size_t bonus, std::size_t penalty1, std::size_t penalty2, Rng& rng) {
    if (bonus < 1 || penalty1 < 1 || penalty2 < 1) {
        throw ValidationError("plan: need at least one bonus task and one penalty task per agent");
    }
    AssignmentPlan plan;
    plan.m = bonus + penalty1 + penalty2;
    std::vector<std::size_t> ids(plan.m);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    std::shuffle(ids.begin(), ids.end(), rng);
    plan.bonus_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(bonus));
    plan.penalty1_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(bonus),
                             ids.begin() + static_cast<std::ptrdiff_t>(bonus + penalty1));
    plan.penalty2_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(bonus + penalty1), ids.end());

    plan.agent1_order = plan.bonus_ids;
    plan.agent1_order.insert(plan.agent1_order.end(), plan.penalty1_ids.begin(), plan.penalty1_ids.end());
    std::sort(plan.agent1_order.begin(), plan.agent1_order.end());
    plan.agent2_order = plan.bonus_ids;
    plan.agent2_order.insert(plan.agent2_order.end(), plan.penalty2_ids.begin(), plan.penalty2_ids.end());
    std::sort(plan.agent2_order.begin(), plan.agent2_order.end());
    std::shuffle(plan.agent2_order.begin(), plan.agent2_order.end(), rng);
    return plan;
}

/// One bonus task per three tasks, the remainder split evenly between the penalty sets.
inline AssignmentPlan default_plan(std::size_t m, Rng& rng) {
    if (m < 3) throw ValidationError("plan: need at least 3 tasks, got " + std::to_string(m));
    const std::size_t bonus = std::max<std::size_t>(1, m / 3);
    const std::size_t rest = m - bonus;
    return make_plan(bonus, rest - rest / 2, rest / 2, rng);
}

inline std::string task_name(std::size_t id) { return "t" + std::to_string(id); }

namespace detail {

struct StrategySampler {
    std::vector<std::vector<double>> rows;  // rows[k * n + i] = report distribution on signal i under schedule k

    explicit StrategySampler(const std::vector<MixedStrategy>& schedule) {
        for (const auto& s : schedule) {
            for (Eigen::Index i = 0; i < s.matrix().rows(); ++i) {
                std::vector<double> r(static_cast<std::size_t>(s.matrix().cols()));
                for (Eigen::Index c = 0; c < s.matrix().cols(); ++c) r[static_cast<std::size_t>(c)] = s.matrix()(i, c);
                rows.push_back(std::move(r));
            }
        }
        n = schedule.front().n();
        length = schedule.size();
    }

    std::size_t draw(Rng& rng, std::size_t position, std::size_t signal) const {
        return sample_discrete(rng, rows[(position % length) * n + signal]);
    }

    std::size_t n = 0;
    std::size_t length = 0;
};

}  // namespace detail

/// Draws i.i.d. signal pairs per task and applies each agent's strategy schedule by the
/// position at which that agent sees the task. A one-element schedule is a uniform strategy.
inline TaskBatch simulate(const JointSignalModel& model, const std::vector<MixedStrategy>& f_schedule,
                          const std::vector<MixedStrategy>& g_schedule, const AssignmentPlan& plan, Rng& rng) {
    plan.validate();
    if (f_schedule.empty() || g_schedule.empty()) throw ValidationError("simulate: empty strategy schedule");
    const std::size_t n = model.n();
    for (const auto* sched : {&f_schedule, &g_schedule}) {
        for (const auto& s : *sched) detail::require_same_n(n, s.n(), "strategy");
    }

    std::vector<double> cells(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) cells[i * n + j] = model.joint()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    std::vector<std::size_t> s1(plan.m), s2(plan.m);
    for (std::size_t t = 0; t < plan.m; ++t) {
        const std::size_t cell = sample_discrete(rng, cells);
        s1[t] = cell / n;
        s2[t] = cell % n;
    }

    const detail::StrategySampler fs(f_schedule), gs(g_schedule);
    constexpr std::size_t unset = static_cast<std::size_t>(-1);
    std::vector<std::size_t> r1(plan.m, unset), r2(plan.m, unset);
    for (std::size_t pos = 0; pos < plan.agent1_order.size(); ++pos) {
        const auto t = plan.agent1_order[pos];
        r1[t] = fs.draw(rng, pos, s1[t]);
    }
    for (std::size_t pos = 0; pos < plan.agent2_order.size(); ++pos) {
        const auto t = plan.agent2_order[pos];
        r2[t] = gs.draw(rng, pos, s2[t]);
    }

    TaskBatch batch;
    for (auto t : plan.bonus_ids) batch.bonus.push_back({task_name(t), r1[t], r2[t]});
    for (auto t : plan.penalty1_ids) batch.penalty1.push_back({task_name(t), r1[t]});
    for (auto t : plan.penalty2_ids) batch.penalty2.push_back({task_name(t), r2[t]});
    return batch;
}

inline TaskBatch simulate(const JointSignalModel& model, const MixedStrategy& f, const MixedStrategy& g,
                          const AssignmentPlan& plan, Rng& rng) {
    return simulate(model, std::vector<MixedStrategy>{f}, std::vector<MixedStrategy>{g}, plan, rng);
}

struct MonteCarloEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t trials = 0;
};

struct MonteCarloOptions {
    PenaltyMode mode = PenaltyMode::sampled;
    std::size_t threads = 1;
};

/// Mean per-bonus-task net payment over independent trials of m tasks each. The standard error
/// is taken across trial means (one trial: across that trial's bonus tasks).
inline MonteCarloEstimate monte_carlo_expected_score(const JointSignalModel& model, const ScoreMatrix& s,
                                                     const std::vector<MixedStrategy>& f_schedule,
                                                     const std::vector<MixedStrategy>& g_schedule, std::size_t m,
                                                     std::size_t trials, std::uint64_t seed,
                                                     const MonteCarloOptions& opt = {}) {
    if (trials < 1) throw ValidationError("monte carlo: trials must be at least 1");
    if (m < 3) throw ValidationError("monte carlo: m must be at least 3");
    std::vector<double> means(trials);
    std::vector<double> single_trial_nets;
    parallel_for(trials, opt.threads, [&](std::size_t t) {
        Rng rng = make_rng(seed, "mc-trial", t);
        const AssignmentPlan plan = default_plan(m, rng);
        const TaskBatch batch = simulate(model, f_schedule, g_schedule, plan, rng);
        const PaymentRecord rec = pay_batch(batch, s, rng, opt.mode);
        means[t] = rec.mean_net();
        if (trials == 1) {
            for (const auto& p : rec.per_bonus_task) single_trial_nets.push_back(p.net);
        }
    });

    auto mean_and_se = [](const std::vector<double>& xs) {
        const double k = static_cast<double>(xs.size());
        const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / k;
        if (xs.size() < 2) return std::pair{mean, 0.0};
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        return std::pair{mean, std::sqrt(ss / (k - 1.0) / k)};
    };
    const auto [mean, se] = mean_and_se(trials == 1 ? single_trial_nets : means);
    return {mean, se, trials};
}

inline MonteCarloEstimate monte_carlo_expected_score(const JointSignalModel& model, const ScoreMatrix& s,
                                                     const MixedStrategy& f, const MixedStrategy& g, std::size_t m,
                                                     std::size_t trials, std::uint64_t seed,
                                                     const MonteCarloOptions& opt = {}) {
    return monte_carlo_expected_score(model, s, std::vector<MixedStrategy>{f}, std::vector<MixedStrategy>{g}, m,
                                      trials, seed, opt);
}

}  // namespace peerpred
