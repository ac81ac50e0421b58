#pragma once

#include "peerpred/errors.hpp"
#include "peerpred/lp.hpp"
#include "peerpred/matrix.hpp"
#include "peerpred/scoring.hpp"
#include "peerpred/signal_model.hpp"
#include "peerpred/strategy.hpp"
#include "peerpred/tolerances.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <ranges>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace peerpred {

inline constexpr std::size_t kEnumerationCap = 6;
inline constexpr std::size_t kExhaustiveVerificationCap = 4;

/// Index pair into a StrategySpace: agent 1 plays strategy `f`, agent 2 plays `g`.
struct ProfileIndex {
    std::size_t f;
    std::size_t g;
};

/// All n^n deterministic strategies of one agent, in mixed-radix order (signal 0 is the
/// least-significant digit), tagged as permutation / uninformed.
class StrategySpace {
public:
    explicit StrategySpace(std::size_t n, std::size_t cap = kEnumerationCap) : n_(n) {
        if (n < 1) throw ValidationError("strategy space: n must be positive");
        if (n > cap) throw CapExceededError("strategy enumeration: n=" + std::to_string(n) + " exceeds cap", cap);
        count_ = 1;
        for (std::size_t k = 0; k < n; ++k) count_ *= n;
        digits_.resize(count_ * n);
        permutation_.resize(count_);
        uninformed_.resize(count_);
        std::vector<std::uint8_t> cur(n, 0);
        for (std::size_t idx = 0; idx < count_; ++idx) {
            std::copy(cur.begin(), cur.end(), digits_.begin() + static_cast<std::ptrdiff_t>(idx * n));
            std::vector<bool> seen(n, false);
            bool perm = true;
            for (auto d : cur) {
                if (seen[d]) perm = false;
                seen[d] = true;
            }
            permutation_[idx] = perm;
            uninformed_[idx] = std::all_of(cur.begin(), cur.end(), [&](std::uint8_t d) { return d == cur[0]; });
            for (std::size_t k = 0; k < n; ++k) {
                if (++cur[k] < n) break;
                cur[k] = 0;
            }
        }
        identity_ = 0;
        for (std::size_t k = n; k-- > 0;) identity_ = identity_ * n + k;
    }

    std::size_t n() const noexcept { return n_; }
    std::size_t size() const noexcept { return count_; }
    std::size_t profile_count() const noexcept { return count_ * count_; }
    std::size_t identity_index() const noexcept { return identity_; }

    std::size_t report(std::size_t idx, std::size_t signal) const { return digits_[idx * n_ + signal]; }
    bool is_permutation(std::size_t idx) const { return permutation_[idx]; }
    bool is_uninformed(std::size_t idx) const { return uninformed_[idx]; }

    DeterministicStrategy strategy(std::size_t idx) const {
        DeterministicStrategy s{std::vector<std::size_t>(n_)};
        for (std::size_t i = 0; i < n_; ++i) s.report_for[i] = report(idx, i);
        return s;
    }

    std::size_t index_of(const DeterministicStrategy& s) const {
        std::size_t idx = 0;
        for (std::size_t k = n_; k-- > 0;) idx = idx * n_ + s[k];
        return idx;
    }

    /// Lazily generated cross product of both agents' strategies.
    auto profiles() const {
        const std::size_t count = count_;
        return std::views::iota(std::size_t{0}, count * count) |
               std::views::transform([count](std::size_t k) { return ProfileIndex{k / count, k % count}; });
    }

private:
    std::size_t n_;
    std::size_t count_ = 0;
    std::size_t identity_ = 0;
    std::vector<std::uint8_t> digits_;
    std::vector<bool> permutation_;
    std::vector<bool> uninformed_;
};

inline StrategySpace enumerate_profiles(std::size_t n, std::size_t cap = kEnumerationCap) {
    return StrategySpace(n, cap);
}

struct Profile {
    DeterministicStrategy f;
    DeterministicStrategy g;
    double score = 0.0;

    std::size_t deviations() const { return f.deviations() + g.deviations(); }
};

/// Best violating profile of each structural kind (exhaustive verification only).
struct StrongWitnesses {
    std::optional<Profile> unilateral;              ///< exactly one agent truthful
    std::optional<Profile> symmetric;               ///< F = G, not a permutation
    std::optional<Profile> asymmetric_permutation;  ///< F != G, both permutations
    std::optional<Profile> other;
};

enum class VerifyMethod { automatic, exhaustive, decomposed };

struct TruthfulnessVerdict {
    std::size_t n = 0;
    VerifyMethod method = VerifyMethod::exhaustive;
    bool strictly_proper = false;
    bool strongly_truthful = false;
    bool informed_truthful = false;
    double truthful_score = 0.0;
    double max_score = 0.0;
    double max_uninformed_abs = 0.0;  ///< largest |E| over profiles where some agent is uninformed
    std::vector<Profile> best_profiles;
    bool best_profiles_complete = true;
    std::optional<Profile> witness_violation;  ///< against strong truthfulness
    std::optional<Profile> informed_witness;
    std::optional<Profile> proper_witness;
    StrongWitnesses strong_witnesses;
    bool degenerate_delta_entries = false;
    bool asymmetric_delta = false;
};

struct VerifyOptions {
    VerifyMethod method = VerifyMethod::automatic;
    double eq_tol = kDefaultTolerances.eq;
    std::size_t max_best_profiles = 64;
};

namespace detail {

/// column_scores(j, r) = sum_i Delta_ij S(F_i, r): the payoff of agent 2 reporting r on signal j.
inline Matrix column_scores(const DeltaMatrix& delta, const ScoreMatrix& s, const StrategySpace& space,
                            std::size_t f) {
    const std::size_t n = space.n();
    Matrix a = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t fi = space.report(f, i);
        for (std::size_t j = 0; j < n; ++j) {
            const double d = delta(i, j);
            for (std::size_t r = 0; r < n; ++r) a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(r)) += d * s(fi, r);
        }
    }
    return a;
}

/// Scores closer than this count as tied when picking a report, so rounding noise in sums that
/// are exactly zero analytically cannot move the choice off the lowest index.
inline constexpr double kTieBreakTolerance = 1e-12;

/// Column-wise argmax (lowest index on ties).
inline std::pair<DeterministicStrategy, double> best_columns(const Matrix& a) {
    const auto n = a.rows();
    DeterministicStrategy g{std::vector<std::size_t>(static_cast<std::size_t>(n))};
    double total = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        Eigen::Index best = 0;
        for (Eigen::Index r = 1; r < n; ++r) {
            if (a(j, r) > a(j, best) + kTieBreakTolerance) best = r;
        }
        g.report_for[static_cast<std::size_t>(j)] = static_cast<std::size_t>(best);
        total += a(j, best);
    }
    return {g, total};
}

/// Best G subject to G != excluded, exact: either an optimal G already differs from `excluded`
/// in a tied column, or the cheapest single-column change is forced.
inline std::pair<DeterministicStrategy, double> best_columns_excluding(const Matrix& a,
                                                                      const DeterministicStrategy& excluded) {
    auto [g, total] = best_columns(a);
    const auto n = a.rows();
    if (g != excluded) return {g, total};

    double min_loss = std::numeric_limits<double>::infinity();
    Eigen::Index at_col = -1, alt = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto x = static_cast<Eigen::Index>(excluded[static_cast<std::size_t>(j)]);
        for (Eigen::Index r = 0; r < n; ++r) {
            if (r == x) continue;
            const double loss = a(j, x) - a(j, r);
            if (loss < min_loss) {
                min_loss = loss;
                at_col = j;
                alt = r;
            }
        }
    }
    if (at_col < 0) return {g, -std::numeric_limits<double>::infinity()};  // n == 1
    g.report_for[static_cast<std::size_t>(at_col)] = static_cast<std::size_t>(alt);
    return {g, total - min_loss};
}

/// Prefers higher score, then fewer deviations from truthful; earlier candidates win exact ties.
inline void keep_better(std::optional<Profile>& slot, const Profile& candidate, double eq_tol) {
    if (!slot) {
        slot = candidate;
        return;
    }
    if (candidate.score > slot->score + eq_tol) {
        slot = candidate;
    } else if (candidate.score >= slot->score - eq_tol && candidate.deviations() < slot->deviations()) {
        slot = candidate;
    }
}

inline void fill_caveats(TruthfulnessVerdict& v, const DeltaMatrix& delta) {
    v.degenerate_delta_entries = delta.has_zero_entries();
    v.asymmetric_delta = !delta.symmetric();
}

inline TruthfulnessVerdict verify_exhaustive(const DeltaMatrix& delta, const ScoreMatrix& s,
                                             const StrategySpace& space, const VerifyOptions& opt) {
    const std::size_t n = space.n();
    const std::size_t count = space.size();
    const std::size_t id = space.identity_index();
    const double tol = opt.eq_tol;

    std::vector<double> scores(count * count);
    for (std::size_t f = 0; f < count; ++f) {
        const Matrix a = column_scores(delta, s, space, f);
        for (std::size_t g = 0; g < count; ++g) {
            double e = 0.0;
            for (std::size_t j = 0; j < n; ++j) e += a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(space.report(g, j)));
            scores[f * count + g] = e;
        }
    }

    TruthfulnessVerdict v;
    v.n = n;
    v.method = VerifyMethod::exhaustive;
    fill_caveats(v, delta);
    v.truthful_score = scores[id * count + id];
    const double truthful = v.truthful_score;
    v.max_score = *std::max_element(scores.begin(), scores.end());

    bool strong = true, informed = true, proper = true;
    for (const auto [f, g] : space.profiles()) {
        const double e = scores[f * count + g];
        const bool exceeds = e > truthful + tol;
        const bool ties_or_beats = e >= truthful - tol;
        const bool exempt = f == g && space.is_permutation(f);
        const bool uninformed = space.is_uninformed(f) || space.is_uninformed(g);
        const bool unilateral = (f == id) != (g == id);

        if (uninformed) v.max_uninformed_abs = std::max(v.max_uninformed_abs, std::abs(e));

        const bool strong_violation = exceeds || (!exempt && ties_or_beats);
        const bool informed_violation = exceeds || (uninformed && ties_or_beats);
        const bool proper_violation = unilateral && ties_or_beats;
        if (!strong_violation && !informed_violation && !proper_violation) continue;

        const Profile p{space.strategy(f), space.strategy(g), e};
        if (strong_violation) {
            strong = false;
            keep_better(v.witness_violation, p, tol);
            if (!exempt) {
                if (unilateral) {
                    keep_better(v.strong_witnesses.unilateral, p, tol);
                } else if (f == g) {
                    keep_better(v.strong_witnesses.symmetric, p, tol);
                } else if (space.is_permutation(f) && space.is_permutation(g)) {
                    keep_better(v.strong_witnesses.asymmetric_permutation, p, tol);
                } else {
                    keep_better(v.strong_witnesses.other, p, tol);
                }
            }
        }
        if (informed_violation) {
            informed = false;
            keep_better(v.informed_witness, p, tol);
        }
        if (proper_violation) {
            proper = false;
            keep_better(v.proper_witness, p, tol);
        }
    }
    v.strongly_truthful = strong;
    v.informed_truthful = informed;
    v.strictly_proper = proper;

    // Truthful first when it is optimal, then the rest in enumeration order.
    if (truthful >= v.max_score - tol) v.best_profiles.push_back({space.strategy(id), space.strategy(id), truthful});
    for (const auto [f, g] : space.profiles()) {
        const double e = scores[f * count + g];
        if (e < v.max_score - tol || (f == id && g == id)) continue;
        if (v.best_profiles.size() >= opt.max_best_profiles) {
            v.best_profiles_complete = false;
            break;
        }
        v.best_profiles.push_back({space.strategy(f), space.strategy(g), e});
    }
    return v;
}

inline TruthfulnessVerdict verify_decomposed(const DeltaMatrix& delta, const ScoreMatrix& s,
                                             const StrategySpace& space, const VerifyOptions& opt) {
    const std::size_t n = space.n();
    const std::size_t count = space.size();
    const std::size_t id = space.identity_index();
    const double tol = opt.eq_tol;
    const DeterministicStrategy truth = DeterministicStrategy::identity(n);

    TruthfulnessVerdict v;
    v.n = n;
    v.method = VerifyMethod::decomposed;
    v.best_profiles_complete = false;
    fill_caveats(v, delta);
    v.truthful_score = expected_score_det(delta, s, truth, truth);
    const double truthful = v.truthful_score;

    std::vector<std::pair<std::size_t, Profile>> best_per_f;
    best_per_f.reserve(count);
    v.max_score = -std::numeric_limits<double>::infinity();
    bool strong = true, informed = true, proper = true;

    for (std::size_t f = 0; f < count; ++f) {
        const Matrix a = column_scores(delta, s, space, f);
        const DeterministicStrategy fs = space.strategy(f);
        auto [g_best, m_all] = best_columns(a);
        v.max_score = std::max(v.max_score, m_all);
        best_per_f.push_back({f, Profile{fs, g_best, m_all}});

        const bool exceeds = m_all > truthful + tol;

        // Strong: best non-exempt G for this F.
        Profile strong_candidate{fs, g_best, m_all};
        if (space.is_permutation(f)) {
            auto [g2, m2] = best_columns_excluding(a, fs);
            strong_candidate = Profile{fs, g2, m2};
        }
        if (exceeds || strong_candidate.score >= truthful - tol) {
            strong = false;
            keep_better(v.witness_violation, exceeds ? Profile{fs, g_best, m_all} : strong_candidate, tol);
        }

        // Informed: profiles containing an uninformed strategy.
        if (space.is_uninformed(f)) {
            double lo = 0.0;
            for (Eigen::Index j = 0; j < a.rows(); ++j) lo += a.row(j).minCoeff();
            v.max_uninformed_abs = std::max({v.max_uninformed_abs, std::abs(m_all), std::abs(lo)});
            if (exceeds || m_all >= truthful - tol) {
                informed = false;
                keep_better(v.informed_witness, Profile{fs, g_best, m_all}, tol);
            }
        } else if (exceeds) {
            informed = false;
            keep_better(v.informed_witness, Profile{fs, g_best, m_all}, tol);
        }
        for (std::size_t r = 0; r < n; ++r) {
            double e = 0.0;
            for (Eigen::Index j = 0; j < a.rows(); ++j) e += a(j, static_cast<Eigen::Index>(r));
            v.max_uninformed_abs = std::max(v.max_uninformed_abs, std::abs(e));
            if (e >= truthful - tol) {
                informed = false;
                keep_better(v.informed_witness, Profile{fs, DeterministicStrategy::constant(n, r), e}, tol);
            }
        }

        // Proper: agent 2 truthful, agent 1 deviates.
        if (f != id) {
            double e = 0.0;
            for (Eigen::Index j = 0; j < a.rows(); ++j) e += a(j, j);
            if (e >= truthful - tol) {
                proper = false;
                keep_better(v.proper_witness, Profile{fs, truth, e}, tol);
            }
        } else {
            auto [g2, m2] = best_columns_excluding(a, truth);
            if (m2 >= truthful - tol) {
                proper = false;
                keep_better(v.proper_witness, Profile{truth, g2, m2}, tol);
            }
        }
    }
    v.strongly_truthful = strong;
    v.informed_truthful = informed;
    v.strictly_proper = proper;

    if (truthful >= v.max_score - tol) v.best_profiles.push_back({truth, truth, truthful});
    for (const auto& [f, p] : best_per_f) {
        if (p.score < v.max_score - tol || (f == id && p.g == truth)) continue;
        if (v.best_profiles.size() >= opt.max_best_profiles) break;
        v.best_profiles.push_back(p);
    }
    return v;
}

}  // namespace detail

/// Exhaustive truthfulness check over deterministic profiles. Mixed strategies never do
/// strictly better than the best deterministic profile, so this covers the full strategy space.
inline TruthfulnessVerdict verify(const DeltaMatrix& delta, const ScoreMatrix& s, const VerifyOptions& opt = {}) {
    detail::require_same_n(delta.n(), s.n(), "score matrix");
    const StrategySpace space(delta.n());
    VerifyMethod method = opt.method;
    if (method == VerifyMethod::automatic) {
        method = delta.n() <= kExhaustiveVerificationCap ? VerifyMethod::exhaustive : VerifyMethod::decomposed;
    }
    if (method == VerifyMethod::exhaustive && delta.n() > kExhaustiveVerificationCap) {
        throw CapExceededError("exhaustive verification: n=" + std::to_string(delta.n()) + " exceeds cap",
                               kExhaustiveVerificationCap);
    }
    return method == VerifyMethod::exhaustive ? detail::verify_exhaustive(delta, s, space, opt)
                                              : detail::verify_decomposed(delta, s, space, opt);
}

/// Agent 2's optimal reply to a fixed F: each column is maximised independently. O(n^3).
inline std::pair<DeterministicStrategy, double> best_response(const DeltaMatrix& delta, const ScoreMatrix& s,
                                                              const DeterministicStrategy& f) {
    const std::size_t n = delta.n();
    detail::require_same_n(n, s.n(), "score matrix");
    detail::require_same_n(n, f.n(), "strategy F");
    if (!f.is_valid()) throw ValidationError("strategy: report outside 1..n");
    Matrix a = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t r = 0; r < n; ++r) a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(r)) += delta(i, j) * s(f[i], r);
        }
    }
    return detail::best_columns(a);
}

struct FeasibilityResult {
    bool feasible = false;
    std::optional<ScoreMatrix> score_matrix;
    double margin = 0.0;      ///< truthful score minus best non-exempt profile, for the LP optimum
    bool certified = false;   ///< the returned matrix passed verify() as strongly truthful
    std::size_t rounds = 0;
    std::size_t cuts = 0;
};

struct FeasibilityOptions {
    double feas_tol = kDefaultTolerances.feas;
    std::size_t cuts_per_round = 24;
    std::size_t max_rounds = 2000;
};

namespace detail {

struct Cut {
    std::vector<double> coeffs;  // over the n*n shifted score entries u = S + 1
    bool has_margin;
};

inline Cut profile_cut(const DeltaMatrix& delta, const DeterministicStrategy& f, const DeterministicStrategy& g,
                       bool has_margin) {
    const std::size_t n = delta.n();
    Cut c{std::vector<double>(n * n, 0.0), has_margin};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            c.coeffs[f[i] * n + g[j]] += delta(i, j);
            c.coeffs[i * n + j] -= delta(i, j);
        }
    }
    return c;
}

}  // namespace detail

/// Searches for any real score matrix making the mechanism strongly truthful for this Delta.
/// Maximises the margin m subject to E(I,I) - E(F,G) >= m over every profile except symmetric
/// permutations (for which E(P,P) <= E(I,I) suffices), with S in [-1,1]^(n x n). Constraints are
/// generated lazily: the separation oracle is the exact per-F best response.
inline FeasibilityResult strong_truthful_score_exists(const DeltaMatrix& delta, const FeasibilityOptions& opt = {}) {
    const std::size_t n = delta.n();
    const StrategySpace space(n);
    const std::size_t nv = n * n + 1;  // u entries, then margin
    const auto margin_var = static_cast<Eigen::Index>(n * n);
    const double margin_cap = 4.0 * delta.values().cwiseAbs().sum() + 1.0;
    const DeterministicStrategy truth = DeterministicStrategy::identity(n);

    std::vector<detail::Cut> cuts;
    std::set<std::tuple<std::size_t, std::size_t, bool>> cut_keys;
    FeasibilityResult out;

    auto solve = [&]() {
        const auto rows = static_cast<Eigen::Index>(nv + cuts.size());
        Matrix A = Matrix::Zero(rows, static_cast<Eigen::Index>(nv));
        Vector b = Vector::Zero(rows);
        for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(nv); ++k) {
            A(k, k) = 1.0;
            b(k) = k == margin_var ? margin_cap : 2.0;
        }
        for (std::size_t c = 0; c < cuts.size(); ++c) {
            const auto row = static_cast<Eigen::Index>(nv + c);
            for (std::size_t k = 0; k < n * n; ++k) A(row, static_cast<Eigen::Index>(k)) = cuts[c].coeffs[k];
            A(row, margin_var) = cuts[c].has_margin ? 1.0 : 0.0;
        }
        Vector obj = Vector::Zero(static_cast<Eigen::Index>(nv));
        obj(margin_var) = 1.0;
        auto res = lp::maximize(A, b, obj);
        if (res.status != lp::Status::optimal) {
            throw SolverError(res.status == lp::Status::unbounded ? "feasibility LP reported unbounded"
                                                                  : "feasibility LP hit its iteration limit");
        }
        return res;
    };

    struct Violation {
        double amount;
        DeterministicStrategy f, g;
        bool has_margin;
    };

    for (out.rounds = 1; out.rounds <= opt.max_rounds; ++out.rounds) {
        const auto res = solve();
        Matrix sm(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t k = 0; k < n * n; ++k) sm(static_cast<Eigen::Index>(k / n), static_cast<Eigen::Index>(k % n)) = res.x(static_cast<Eigen::Index>(k)) - 1.0;
        const ScoreMatrix s = ScoreMatrix::custom(sm);
        const double m = res.x(margin_var);
        const double truthful = expected_score_det(delta, s, truth, truth);

        std::vector<Violation> violations;
        double worst_non_exempt = -std::numeric_limits<double>::infinity();
        double worst_exempt_excess = -std::numeric_limits<double>::infinity();
        for (std::size_t f = 0; f < space.size(); ++f) {
            const Matrix a = detail::column_scores(delta, s, space, f);
            const DeterministicStrategy fs = space.strategy(f);
            if (space.is_permutation(f)) {
                auto [g2, e2] = detail::best_columns_excluding(a, fs);
                worst_non_exempt = std::max(worst_non_exempt, e2);
                if (e2 - (truthful - m) > 1e-10) violations.push_back({e2 - (truthful - m), fs, g2, true});
                double ep = 0.0;
                for (std::size_t j = 0; j < n; ++j) ep += a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(fs[j]));
                worst_exempt_excess = std::max(worst_exempt_excess, ep - truthful);
                if (ep - truthful > 1e-10) violations.push_back({ep - truthful, fs, fs, false});
            } else {
                auto [g, e] = detail::best_columns(a);
                worst_non_exempt = std::max(worst_non_exempt, e);
                if (e - (truthful - m) > 1e-10) violations.push_back({e - (truthful - m), fs, g, true});
            }
        }

        // Violations of cuts already in the LP are solver rounding; they carry no new information.
        std::erase_if(violations, [&](const Violation& v) {
            return cut_keys.contains({space.index_of(v.f), space.index_of(v.g), v.has_margin});
        });
        if (violations.empty()) {
            out.margin = truthful - worst_non_exempt;
            out.cuts = cuts.size();
            out.feasible = out.margin > opt.feas_tol && worst_exempt_excess <= opt.feas_tol;
            if (out.feasible) {
                out.score_matrix = s;
                out.certified = verify(delta, s).strongly_truthful;
            }
            return out;
        }

        std::sort(violations.begin(), violations.end(),
                  [](const Violation& x, const Violation& y) { return x.amount > y.amount; });
        std::size_t added = 0;
        for (const auto& v : violations) {
            if (added == opt.cuts_per_round) break;
            if (!cut_keys.insert({space.index_of(v.f), space.index_of(v.g), v.has_margin}).second) continue;
            cuts.push_back(detail::profile_cut(delta, v.f, v.g, v.has_margin));
            ++added;
        }
    }
    throw SolverError("feasibility search did not converge within " + std::to_string(opt.max_rounds) + " rounds");
}

struct UnintendedSignalBound {
    double intended_score;     ///< truthful CA score under the intended signal
    double alternative_bound;  ///< upper bound on any strategy under the alternative signal
    bool safe;                 ///< intended >= alternative; ties count as safe
};

inline UnintendedSignalBound unintended_signal_bound(const DeltaMatrix& intended, const DeltaMatrix& alternative) {
    const double a = intended.positive_mass();
    const double b = alternative.positive_mass();
    return {a, b, a >= b};
}

}  // namespace peerpred
