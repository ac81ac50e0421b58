#include "fixtures.hpp"

#include <gtest/gtest.h>

using namespace peerpred;

namespace {

void expect_matches_oracle(const JointSignalModel& world, const ScoreMatrix& s, const std::string& label) {
    const auto v = verify(delta_of(world), s);
    const auto ref = oracle::verdict(fixtures::grid(world.joint()), fixtures::grid(s.values()));
    EXPECT_EQ(v.strongly_truthful, ref.strongly_truthful) << label;
    EXPECT_EQ(v.informed_truthful, ref.informed_truthful) << label;
    EXPECT_EQ(v.strictly_proper, ref.strictly_proper) << label;
    EXPECT_NEAR(v.truthful_score, ref.truthful, 1e-12) << label;
    EXPECT_NEAR(v.max_score, ref.max_score, 1e-12) << label;
    EXPECT_NEAR(v.max_uninformed_abs, ref.max_uninformed_abs, 1e-12) << label;
}

}  // namespace

TEST(StrategySpace, Counts) {
    const auto s2 = enumerate_profiles(2);
    EXPECT_EQ(s2.size(), 4u);
    EXPECT_EQ(s2.profile_count(), 16u);
    EXPECT_EQ(std::ranges::distance(s2.profiles()), 16);
    const StrategySpace s3(3);
    EXPECT_EQ(s3.size(), 27u);
    std::size_t perms = 0, uninformed = 0;
    for (std::size_t k = 0; k < s3.size(); ++k) {
        perms += s3.is_permutation(k);
        uninformed += s3.is_uninformed(k);
        EXPECT_EQ(s3.index_of(s3.strategy(k)), k);
        EXPECT_EQ(s3.is_permutation(k), s3.strategy(k).is_permutation());
    }
    EXPECT_EQ(perms, 6u);
    EXPECT_EQ(uninformed, 3u);
    EXPECT_TRUE(s3.strategy(s3.identity_index()).is_truthful());
}

TEST(StrategySpace, CapExceeded) {
    EXPECT_THROW(StrategySpace(7), CapExceededError);
    const auto d = DeltaMatrix::from_matrix(Matrix::Zero(7, 7));
    try {
        verify(d, ScoreMatrix::msdg(7));
        FAIL();
    } catch (const CapExceededError& e) {
        EXPECT_EQ(e.cap(), kEnumerationCap);
    }
    const auto d5 = delta_of(fixtures::ordinal_world(5));
    EXPECT_THROW(verify(d5, ScoreMatrix::msdg(5), {VerifyMethod::exhaustive}), CapExceededError);
}

TEST(Verify, ExampleModelMsdgStronglyTruthful) {
    const auto v = verify(delta_of(fixtures::example_model()), ScoreMatrix::msdg(2));
    EXPECT_TRUE(v.strongly_truthful);
    EXPECT_TRUE(v.informed_truthful);
    EXPECT_TRUE(v.strictly_proper);
    EXPECT_FALSE(v.witness_violation);
    EXPECT_NEAR(v.truthful_score, 0.195, 1e-12);
    ASSERT_EQ(v.best_profiles.size(), 2u);
    EXPECT_TRUE(v.best_profiles[0].f.is_truthful());
    EXPECT_EQ(v.best_profiles[1].f, (DeterministicStrategy{{1, 0}}));
}

TEST(Verify, MatchesOracleOnRandomWorlds) {
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        const std::size_t n = 2 + seed % 2;
        const auto world = generate_world({RandomDirichlet{n, 0.6, seed % 3 != 0}, seed});
        const auto d = delta_of(world);
        expect_matches_oracle(world, ScoreMatrix::msdg(n), "msdg " + std::to_string(seed));
        expect_matches_oracle(world, ScoreMatrix::ca(sign_of(d)), "ca " + std::to_string(seed));
    }
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const auto world = fixtures::random_categorical(seed, 4);
        expect_matches_oracle(world, ScoreMatrix::msdg(4), "msdg4 " + std::to_string(seed));
    }
    expect_matches_oracle(fixtures::clustered_world(), ScoreMatrix::ca(sign_of(delta_of(fixtures::clustered_world()))),
                          "clustered");
}

TEST(Verify, DecomposedAgreesWithExhaustive) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const std::size_t n = 2 + seed % 3;
        const auto world = generate_world({RandomDirichlet{n, 0.8, seed % 2 == 0}, seed});
        const auto d = delta_of(world);
        for (const auto& s : {ScoreMatrix::msdg(n), ScoreMatrix::ca(sign_of(d))}) {
            const auto a = verify(d, s, {VerifyMethod::exhaustive});
            const auto b = verify(d, s, {VerifyMethod::decomposed});
            EXPECT_EQ(a.strongly_truthful, b.strongly_truthful) << seed;
            EXPECT_EQ(a.informed_truthful, b.informed_truthful) << seed;
            EXPECT_EQ(a.strictly_proper, b.strictly_proper) << seed;
            EXPECT_NEAR(a.max_score, b.max_score, 1e-12) << seed;
            EXPECT_NEAR(a.max_uninformed_abs, b.max_uninformed_abs, 1e-12) << seed;
            EXPECT_EQ(a.witness_violation.has_value(), b.witness_violation.has_value());
            if (b.witness_violation) {
                const auto& w = *b.witness_violation;
                EXPECT_NEAR(expected_score_det(d, s, w.f, w.g), w.score, 1e-12);
                EXPECT_NEAR(w.score, a.witness_violation->score, 1e-12) << seed;
            }
        }
    }
}

TEST(Verify, OrdinalWorldMsdgMergesCaInformed) {
    const auto world = fixtures::ordinal_world(5);
    const auto d = delta_of(world);
    const auto msdg = verify(d, ScoreMatrix::msdg(5));
    EXPECT_EQ(msdg.method, VerifyMethod::decomposed);
    EXPECT_FALSE(msdg.strongly_truthful);
    ASSERT_TRUE(msdg.witness_violation);
    EXPECT_GT(msdg.witness_violation->score, msdg.truthful_score);
    // Any agreement on a merged report gains: check the simplest merge directly.
    const DeterministicStrategy merge{{0, 0, 2, 3, 4}};
    EXPECT_NEAR(expected_score_det(d, ScoreMatrix::msdg(5), merge, merge), d.values().trace() + d(0, 1) + d(1, 0), 1e-12);

    const auto ca = verify(d, ScoreMatrix::ca(sign_of(d)));
    EXPECT_TRUE(ca.informed_truthful);
    EXPECT_NEAR(ca.truthful_score, d.positive_mass(), 1e-12);
}

TEST(Verify, ClusteredWorldRowReplacementTies) {
    const auto d = DeltaMatrix::from_matrix(fixtures::clustered_delta());
    const auto v = verify(d, ScoreMatrix::ca(sign_of(d)));
    EXPECT_TRUE(v.informed_truthful);
    EXPECT_FALSE(v.strongly_truthful);
    ASSERT_TRUE(v.strong_witnesses.unilateral);
    const auto& w = *v.strong_witnesses.unilateral;
    EXPECT_TRUE(w.g.is_truthful());
    EXPECT_EQ(w.f.deviations(), 1u);
    EXPECT_NEAR(w.score, v.truthful_score, 1e-9);
    const auto sign = sign_of(d).sign;
    for (std::size_t k = 0; k < 4; ++k) {
        if (w.f[k] != k) {
            EXPECT_EQ(sign.row(static_cast<Eigen::Index>(k)), sign.row(static_cast<Eigen::Index>(w.f[k])));
        }
    }
}

TEST(Verify, PairedPermutationProfileTies) {
    const auto d = DeltaMatrix::from_matrix(fixtures::paired_delta());
    const auto v = verify(d, ScoreMatrix::ca(sign_of(d)));
    EXPECT_TRUE(v.informed_truthful);
    EXPECT_FALSE(v.strongly_truthful);
    ASSERT_TRUE(v.strong_witnesses.asymmetric_permutation);
    const auto& w = *v.strong_witnesses.asymmetric_permutation;
    EXPECT_TRUE(w.f.is_permutation());
    EXPECT_TRUE(w.g.is_permutation());
    EXPECT_NE(w.f, w.g);
    EXPECT_NEAR(w.score, v.truthful_score, 1e-9);
}

TEST(Verify, StrongVerdictImpliesPermutationEquality) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t n = 2 + seed % 3;
        const auto d = delta_of(fixtures::random_categorical(seed, n));
        const auto s = ScoreMatrix::msdg(n);
        const auto v = verify(d, s);
        ASSERT_TRUE(v.strongly_truthful) << seed;
        DeterministicStrategy p = DeterministicStrategy::identity(n);
        do {
            EXPECT_NEAR(expected_score_det(d, s, p, p), v.truthful_score, 1e-12);
        } while (std::next_permutation(p.report_for.begin(), p.report_for.end()));
    }
}

TEST(BestResponse, MatchesOracleForEveryF) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const std::size_t n = 2 + seed % 3;
        const auto world = generate_world({RandomDirichlet{n, 1.0, false}, seed});
        const auto d = delta_of(world);
        const auto s = ScoreMatrix::ca(sign_of(d));
        const StrategySpace space(n);
        for (std::size_t f = 0; f < space.size(); ++f) {
            const auto [g, e] = best_response(d, s, space.strategy(f));
            const auto [gr, er] = oracle::best_reply(fixtures::grid(world.joint()), fixtures::grid(s.values()),
                                                     space.strategy(f).report_for);
            EXPECT_NEAR(e, er, 1e-12);
            EXPECT_NEAR(expected_score_det(d, s, space.strategy(f), g), er, 1e-12);
        }
    }
}

TEST(BestResponse, TiesBreakLow) {
    const auto d = delta_of(fixtures::example_model());
    const auto zero = ScoreMatrix::custom(Matrix::Zero(2, 2));
    const auto [g, e] = best_response(d, zero, DeterministicStrategy{{1, 0}});
    EXPECT_EQ(g, DeterministicStrategy::constant(2, 0));
    EXPECT_EQ(e, 0.0);
    const auto [g2, e2] = best_response(d, ScoreMatrix::msdg(2), DeterministicStrategy::constant(2, 1));
    EXPECT_EQ(g2, DeterministicStrategy::constant(2, 0));
    EXPECT_NEAR(e2, 0.0, 1e-15);
    const auto id = DeterministicStrategy::identity(2);
    const auto [g3, e3] = best_response(d, ScoreMatrix::msdg(2), id);
    EXPECT_TRUE(g3.is_truthful());
    EXPECT_NEAR(e3, d.values().trace(), 1e-12);
}

TEST(Feasibility, ImpossibilityFamily) {
    for (auto [x, y] : {std::pair{0.2, 0.1}, {0.3, 0.05}, {0.5, 0.2}}) {
        const auto world = fixtures::impossibility_world(x, y);
        EXPECT_GE(world.joint().minCoeff(), 0.0);
        const auto r = strong_truthful_score_exists(delta_of(world));
        EXPECT_FALSE(r.feasible) << x << "," << y;
        EXPECT_FALSE(r.score_matrix);
    }
}

TEST(Feasibility, ClusteredInfeasible) {
    EXPECT_FALSE(strong_truthful_score_exists(DeltaMatrix::from_matrix(fixtures::clustered_delta())).feasible);
}

TEST(Feasibility, CategoricalCertified) {
    const auto r = strong_truthful_score_exists(delta_of(fixtures::example_model()));
    ASSERT_TRUE(r.feasible);
    ASSERT_TRUE(r.score_matrix);
    EXPECT_TRUE(r.certified);
    EXPECT_GT(r.margin, kDefaultTolerances.feas);
    EXPECT_TRUE((r.score_matrix->values().array().abs() <= 1.0 + 1e-12).all());
    EXPECT_TRUE(verify(delta_of(fixtures::example_model()), ScoreMatrix::msdg(2)).strongly_truthful);
}

TEST(Feasibility, ResultMarginMatchesVerify) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const std::size_t n = 2 + seed % 3;
        const auto d = delta_of(fixtures::random_categorical(seed, n));
        const auto r = strong_truthful_score_exists(d);
        ASSERT_TRUE(r.feasible) << seed;
        const auto v = verify(d, *r.score_matrix);
        EXPECT_TRUE(v.strongly_truthful);
        // Truthful minus the best non-exempt profile equals the reported margin.
        double best_non_exempt = -1e300;
        const StrategySpace space(n);
        for (const auto [f, g] : space.profiles()) {
            if (f == g && space.is_permutation(f)) continue;
            best_non_exempt = std::max(best_non_exempt, expected_score_det(d, *r.score_matrix, space.strategy(f), space.strategy(g)));
        }
        EXPECT_NEAR(r.margin, v.truthful_score - best_non_exempt, 1e-9);
    }
}

/// This world's LP optimum sits on a degenerate vertex; the tableau alone drifted ~1e-6 off it
/// and the cut loop kept re-adding the same cuts.
TEST(Feasibility, DegenerateVertexConverges) {
    const auto d = delta_of(fixtures::random_categorical(7011, 4));
    FeasibilityOptions opt;
    opt.max_rounds = 50;
    const auto r = strong_truthful_score_exists(d, opt);
    EXPECT_TRUE(r.feasible);
    EXPECT_TRUE(r.certified);
    EXPECT_LT(r.rounds, 20u);
}

TEST(Lp, VertexIsExactOnOriginalConstraints) {
    // Many redundant, nearly parallel rows through one vertex.
    const Eigen::Index rows = 40;
    Matrix A(rows, 2);
    Vector b(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const double t = 1.0 + 1e-3 * static_cast<double>(i);
        A(i, 0) = t;
        A(i, 1) = 1.0 / t;
        b(i) = t + 1.0 / t;  // every row passes through (1, 1)
    }
    const auto res = lp::maximize(A, b, Vector::Ones(2));
    ASSERT_EQ(res.status, lp::Status::optimal);
    const Vector slack = b - A * res.x;
    EXPECT_GE(slack.minCoeff(), -1e-12);
}

TEST(UnintendedSignals, Bounds) {
    const auto d = delta_of(fixtures::example_model());
    const auto same = unintended_signal_bound(d, d);
    EXPECT_TRUE(same.safe);
    EXPECT_NEAR(same.intended_score, 0.195, 1e-12);
    const auto zero = unintended_signal_bound(d, DeltaMatrix::from_matrix(Matrix::Zero(3, 3)));
    EXPECT_EQ(zero.alternative_bound, 0.0);
    EXPECT_TRUE(zero.safe);
    // Scale a categorical Delta until its positive mass is 0.3.
    const auto alt = DeltaMatrix::from_matrix(d.values() * (0.3 / 0.195));
    const auto r = unintended_signal_bound(d, alt);
    EXPECT_NEAR(r.alternative_bound, 0.3, 1e-12);
    EXPECT_FALSE(r.safe);
}
