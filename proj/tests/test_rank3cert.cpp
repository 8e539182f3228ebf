#include <gtest/gtest.h>

#include <set>

#include "mixrank/rank3cert/brackets.hpp"
#include "mixrank/rank3cert/factorization.hpp"
#include "mixrank/rank3cert/membership.hpp"
#include "mixrank/rank3cert/polygons.hpp"
#include "support/mpoly.hpp"
#include "support/testutil.hpp"

using namespace mixrank;
using namespace mixrank::rank3;
using mixrank::testing::MPoly;
using mixrank::testing::random_matrix;
using mixrank::testing::random_nonneg_product;
using mixrank::testing::rectangle;
using mixrank::testing::shuffled;
using mixrank::testing::u_ab;

namespace {

const MPoly& oracle() {
    static const MPoly p = mixrank::testing::six_three_oracle();
    return p;
}

// Rows 0..3 of A are a_i, a_j, a_k, a_l; columns 0..2 of B are b_ip, b_jp, b_kp.
std::vector<Rational> flatten(const RationalMatrix& A, const RationalMatrix& B) {
    std::vector<Rational> x;
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 3; ++c) x.push_back(A(r, c));
    for (std::size_t v = 0; v < 3; ++v)
        for (std::size_t c = 0; c < 3; ++c) x.push_back(B(c, v));
    return x;
}

} // namespace

TEST(Brackets, Bracket3IsDeterminantAndRejectsRepeats) {
    Rng rng(1);
    auto A = random_matrix(5, 3, rng, -6, 6);
    EXPECT_EQ(bracket3(A, 0, 2, 4), determinant(A.select_rows({0, 2, 4})));
    EXPECT_EQ(bracket3(A, 2, 0, 4), -bracket3(A, 0, 2, 4));
    EXPECT_THROW(bracket3(A, 1, 1, 3), IndexError);
    EXPECT_THROW(bracket3(A, 0, 1, 5), IndexError);
}

TEST(Brackets, MeetJoinMatchesTwelveTermExpansion) {
    Rng rng(2);
    for (int t = 0; t < 100; ++t) {
        auto A = random_matrix(4, 3, rng, -9, 9, 7);
        auto B = random_matrix(3, 5, rng, -9, 9, 7);
        const auto i = uniform_int(rng, 0, 3), j = uniform_int(rng, 0, 3);
        const auto ip = uniform_int(rng, 0, 4), kp = uniform_int(rng, 0, 4);
        EXPECT_EQ(meet_join(A, B, i, j, ip, kp), meet_join_expanded(A, B, i, j, ip, kp));
    }
}

TEST(Brackets, MeetJoinSymbolicHasTwelveTerms) {
    Matrix<MPoly> A(2, 3), B(3, 2);
    for (std::size_t k = 0; k < 6; ++k) A.data()[k] = MPoly::variable(k);
    for (std::size_t k = 0; k < 6; ++k) B.data()[k] = MPoly::variable(6 + k);
    const MPoly direct = det3(cross(row3(A, 0), row3(A, 1)), col3(B, 0), col3(B, 1));
    EXPECT_EQ(direct.monomials(), 12u);
    EXPECT_EQ(direct, meet_join_expanded(A, B, 0, 1, 0, 1));
}

TEST(Brackets, SixThreeExpansionHas330Monomials) {
    EXPECT_EQ(oracle().monomials(), 330u);
    EXPECT_EQ(oracle().degree_in(0, 12), 6);
    EXPECT_EQ(oracle().degree_in(12, 21), 3);
}

TEST(Brackets, SixThreeSymbolicAgreesWithOracle) {
    mixrank::testing::SixThreeSymbols s;
    const MPoly composed = six_three_at(cross(s.a[0], s.a[1]), s.b[0], s.b[1], s.a[2], s.a[3], s.b[2]);
    EXPECT_EQ(composed, oracle());
}

TEST(Brackets, SixThreeMatchesOracleAtRandomPoints) {
    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
        auto A = random_matrix(4, 3, rng, -7, 7, 6);
        auto B = random_matrix(3, 3, rng, -7, 7, 6);
        EXPECT_EQ(six_three(A, B, 0, 1, 2, 3, 0, 1, 2), oracle().eval(flatten(A, B)));
    }
}

TEST(Brackets, SixThreeVanishesWhenBracketsDegenerate) {
    Rng rng(4);
    auto A = random_matrix(4, 3, rng, -5, 5);
    auto B = random_matrix(3, 3, rng, -5, 5);
    EXPECT_EQ(six_three(A, B, 0, 0, 2, 3, 0, 1, 2), 0);  // a_i = a_j
    // p and q coincide when (ip, k) = (jp, l)
    EXPECT_EQ(six_three(A, B, 0, 1, 2, 2, 0, 0, 1), 0);
}

TEST(Brackets, ShapeChecks) {
    RationalMatrix A(4, 2), B(3, 4);
    EXPECT_THROW(meet_join(A, B, 0, 1, 0, 1), DimensionError);
    RationalMatrix A3(4, 3);
    EXPECT_THROW(six_three(A3, B, 0, 1, 2, 9, 0, 1, 2), IndexError);
}

TEST(Membership, Anchors) {
    EXPECT_EQ(nnrank3_membership(canonical(u_ab(1, 0) / Rational(8))).verdict, Verdict::out);
    EXPECT_EQ(nnrank3_membership(canonical(u_ab(100, 41) / Rational(1128))).verdict, Verdict::out);
    EXPECT_EQ(nnrank3_membership(canonical(u_ab(100, 42) / Rational(1136))).verdict, Verdict::in);
    EXPECT_EQ(nnrank3_membership(rectangle(Rational(1, 4), Rational(1, 4))).verdict, Verdict::in);
    EXPECT_EQ(nnrank3_membership(rectangle(Rational(1, 2), Rational(1, 2))).verdict, Verdict::out);
}

TEST(Membership, RectangleThresholdOnGrid) {
    for (int p = 0; p <= 8; ++p)
        for (int q = 0; q <= 8; ++q) {
            const Rational a(p, 8), b(q, 8);
            Rational a1 = a, b1 = b;
            a1.canonicalize();
            b1.canonicalize();
            const auto d = nnrank3_membership(rectangle(a1, b1));
            const bool expect = a1 * b1 + a1 + b1 <= 1;
            EXPECT_EQ(is_member(d.verdict), expect) << "a=" << a1 << " b=" << b1;
        }
}

TEST(Membership, WitnessIndicesAreValid) {
    const auto d = nnrank3_membership(canonical(u_ab(100, 60)));
    ASSERT_EQ(d.verdict, Verdict::in);
    ASSERT_TRUE(d.witness.has_value());
    const auto& w = *d.witness;
    EXPECT_LT(w.i, w.j);
    EXPECT_NE(w.iprime, w.jprime);
    EXPECT_LT(w.j, 4u);
    EXPECT_LT(std::max(w.iprime, w.jprime), 4u);
}

TEST(Membership, FailureLogForU10) {
    const auto d = nnrank3_membership(u_ab(1, 0));
    EXPECT_EQ(d.verdict, Verdict::out);
    EXPECT_FALSE(d.witness);
    // 6 row pairs x 12 ordered column pairs, in both orientations
    EXPECT_EQ(d.failure_log.size(), 144u);
    MembershipOptions quiet;
    quiet.log_failures = false;
    EXPECT_TRUE(nnrank3_membership(u_ab(1, 0), quiet).failure_log.empty());
}

TEST(Membership, RankDeficientIsIn) {
    RationalMatrix P{{1, 2, 3}, {2, 4, 6}, {1, 1, 1}};
    EXPECT_EQ(nnrank3_membership(P).verdict, Verdict::rank_deficient_in);
    EXPECT_EQ(nnrank3_membership(RationalMatrix(3, 4)).verdict, Verdict::rank_deficient_in);
}

TEST(Membership, NegativeThrowsRankFourIsOut) {
    RationalMatrix N{{1, -1, 0}, {0, 1, 0}, {0, 0, 1}};
    EXPECT_THROW(nnrank3_membership(N), DomainError);
    const auto d = nnrank3_membership(RationalMatrix::identity(4));
    EXPECT_EQ(d.verdict, Verdict::out);
    EXPECT_EQ(d.rank, 4u);
}

TEST(Membership, ZeroLinesAreIgnored) {
    RationalMatrix P = canonical(u_ab(100, 42));
    RationalMatrix Q(5, 5);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) Q(i < 2 ? i : i + 1, j < 3 ? j : j + 1) = P(i, j);
    EXPECT_EQ(nnrank3_membership(Q).verdict, Verdict::in);
}

TEST(Membership, InvariancesOnRandomProducts) {
    Rng rng(5);
    for (int t = 0; t < 60; ++t) {
        const std::size_t m = 4 + t % 3, n = 4 + (t / 3) % 3;
        auto P = random_nonneg_product(m, n, rng);
        const auto d = nnrank3_membership(P);
        EXPECT_TRUE(is_member(d.verdict));
        EXPECT_TRUE(is_member(nnrank3_membership(P.transpose()).verdict));
        EXPECT_TRUE(is_member(nnrank3_membership(canonical(P * Rational(3, 7))).verdict));
        auto Q = P.select_rows(shuffled(m, rng)).select_cols(shuffled(n, rng));
        EXPECT_TRUE(is_member(nnrank3_membership(Q).verdict));
    }
}

TEST(Membership, VerdictInvariantUnderSymmetriesOfUab) {
    for (long b : {30L, 41L, 42L, 50L}) {
        auto P = u_ab(100, b);
        const auto v = nnrank3_membership(P).verdict;
        EXPECT_EQ(nnrank3_membership(P.transpose()).verdict, v);
        EXPECT_EQ(nnrank3_membership(P.select_rows({3, 1, 2, 0})).verdict, v);
    }
}

TEST(Membership, OfFactorizationAgreesWithProduct) {
    Rng rng(6);
    for (int t = 0; t < 30; ++t) {
        RationalMatrix A(5, 3), B(3, 4);
        for (auto& v : A.data()) v = Rational(uniform_int(rng, 0, 6));
        for (auto& v : B.data()) v = Rational(uniform_int(rng, 0, 6));
        EXPECT_EQ(is_member(membership_of_factorization(A, B).verdict),
                  is_member(nnrank3_membership(canonical(A * B)).verdict));
    }
    EXPECT_THROW(membership_of_factorization(RationalMatrix(4, 2), RationalMatrix(2, 4)), DimensionError);
}

TEST(Membership, FloatBackendAgreesAwayFromTheBoundary) {
    Rng rng(7);
    for (int t = 0; t < 40; ++t) {
        auto P = random_nonneg_product(4, 5, rng);
        const auto d = nnrank3_membership(to_real(P));
        EXPECT_EQ(d.backend, Backend::floating);
        EXPECT_TRUE(is_member(d.verdict));
    }
    EXPECT_EQ(nnrank3_membership(to_real(u_ab(1, 0))).verdict, Verdict::out);
    EXPECT_EQ(nnrank3_membership(to_real(u_ab(100, 30))).verdict, Verdict::out);
    EXPECT_EQ(nnrank3_membership(to_real(u_ab(100, 60))).verdict, Verdict::in);
}

TEST(Factorization, RoundTripOnRandomProducts) {
    Rng rng(8);
    for (int t = 0; t < 60; ++t) {
        auto P = random_nonneg_product(4 + t % 3, 4 + (t / 2) % 3, rng);
        const auto f = nonneg_rank3_factorize(P);
        EXPECT_EQ(f.A * f.B, P);
        EXPECT_TRUE(all_nonnegative(f.A));
        EXPECT_TRUE(all_nonnegative(f.B));
        EXPECT_EQ(f.A.cols(), 3u);
    }
}

TEST(Factorization, AnchorsAndRefusal) {
    for (long b : {42L, 50L, 100L}) {
        auto P = canonical(u_ab(100, b) / Rational(8 * (100 + b)));
        const auto f = nonneg_rank3_factorize(P);
        EXPECT_EQ(f.A * f.B, P);
        EXPECT_TRUE(all_nonnegative(f.A) && all_nonnegative(f.B));
    }
    auto R = rectangle(Rational(1, 3), Rational(1, 2));
    const auto f = nonneg_rank3_factorize(R);
    EXPECT_EQ(f.A * f.B, R);
    EXPECT_THROW(nonneg_rank3_factorize(u_ab(1, 0)), RefusalError);
    EXPECT_THROW(nonneg_rank3_factorize(u_ab(100, 41)), RefusalError);
}

TEST(Factorization, LowRankAndZeroLines) {
    RationalMatrix P1{{1, 2, 3}, {2, 4, 6}};
    auto f1 = nonneg_rank3_factorize(P1);
    EXPECT_EQ(f1.A * f1.B, P1);
    EXPECT_TRUE(all_nonnegative(f1.A) && all_nonnegative(f1.B));
    RationalMatrix P2{{1, 0, 2}, {0, 1, 1}, {1, 1, 3}, {0, 0, 0}};
    auto f2 = nonneg_rank3_factorize(P2);
    EXPECT_EQ(f2.A * f2.B, P2);
    EXPECT_TRUE(all_nonnegative(f2.A) && all_nonnegative(f2.B));
    auto f0 = nonneg_rank3_factorize(RationalMatrix(2, 2));
    EXPECT_EQ(f0.A * f0.B, RationalMatrix(2, 2));
}

TEST(Polygons, InnerInsideOuterForMembers) {
    auto poly = nested_polygons(rectangle(Rational(1, 4), Rational(1, 4)));
    EXPECT_EQ(poly.outer.size(), 4u);
    EXPECT_EQ(poly.inner.size(), 4u);
    for (const auto& x : poly.inner_chart) EXPECT_TRUE(chart_contains(poly.outer_chart, x));
    EXPECT_THROW(nested_polygons(RationalMatrix::identity(4)), DomainError);
}
