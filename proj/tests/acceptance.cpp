#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mixrank/boundary.hpp"
#include "mixrank/em.hpp"
#include "mixrank/families.hpp"
#include "mixrank/harness.hpp"
#include "mixrank/rank3cert/brackets.hpp"
#include "mixrank/rank3cert/factorization.hpp"
#include "mixrank/rank3cert/membership.hpp"
#include "support/mpoly.hpp"
#include "support/testutil.hpp"

// One PASS/FAIL line per acceptance criterion; exit status 1 if any fail.

using namespace mixrank;
using mixrank::testing::u_ab;
using mixrank::testing::rectangle;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream note;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (pass) note << "failed: ";
            else note << "; ";
            note << what;
            pass = false;
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool in_p1_orbit(const RealMatrix& P, const RealMatrix& base, double tol) {
    std::vector<std::size_t> rp{0, 1, 2, 3};
    for (int t = 0; t < 2; ++t) {
        const RealMatrix Q = t ? base.transpose() : base;
        std::sort(rp.begin(), rp.end());
        do {
            std::vector<std::size_t> cp{0, 1, 2, 3};
            do {
                const auto R = Q.select_rows(rp).select_cols(cp);
                double d = 0.0;
                for (std::size_t k = 0; k < R.size(); ++k) d = std::max(d, std::fabs(R.data()[k] - P.data()[k]));
                if (d < tol) return true;
            } while (std::next_permutation(cp.begin(), cp.end()));
        } while (std::next_permutation(rp.begin(), rp.end()));
    }
    return false;
}

RationalMatrix p1_exact() {
    return canonical(RationalMatrix{{3, 3, 0, 0}, {2, 0, 4, 0}, {0, 2, 0, 4}, {1, 1, 2, 2}} / Rational(24));
}

void c1(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    using rank3::Verdict;
    o.require(rank3::nnrank3_membership(canonical(u_ab(1, 0) / Rational(8))).verdict == Verdict::out, "U10/8");
    o.require(rank3::nnrank3_membership(canonical(u_ab(100, 41) / Rational(1128))).verdict == Verdict::out, "U_{100,41}");
    o.require(rank3::nnrank3_membership(canonical(u_ab(100, 42) / Rational(1136))).verdict == Verdict::in, "U_{100,42}");
    o.require(rank3::nnrank3_membership(rectangle(Rational(1, 4), Rational(1, 4))).verdict == Verdict::in, "P(1/4,1/4)");
    o.require(rank3::nnrank3_membership(rectangle(Rational(1, 2), Rational(1, 2))).verdict == Verdict::out, "P(1/2,1/2)");
    const double s = seconds_since(t0);
    o.require(s < 1.0, "runtime");
    o.note << " (" << s << " s)";
}

void c2(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<bool> model(101);
    for (long b = 0; b <= 100; ++b) {
        model[b] = families::uab_in_model(100, b);
        const auto d = rank3::nnrank3_membership(canonical(u_ab(100, b)));
        o.require(rank3::is_member(d.verdict) == model[b], "disagreement at b=" + std::to_string(b));
    }
    for (long b = 0; b <= 100; ++b) o.require(model[b] == (b >= 42), "model flag at b=" + std::to_string(b));
    const double s = seconds_since(t0);
    o.require(s < 30.0, "runtime");
    o.note << " flip between 41 and 42 (" << s << " s)";
}

void c3(Outcome& o) {
    const auto mle = families::uab_closed_form_mle(1, 0);
    if (!mle.exact_params || !mle.exact_matrices) {
        o.require(false, "t not rational");
        return;
    }
    const auto& q = *mle.exact_params;
    o.require(q.t == Rational(4, 3) && q.s == Rational(1, 3) && q.r == Rational(2, 3) && q.v == Rational(2, 3) &&
                  q.w == 0 && q.u == 0,
              "parameters");
    o.require((*mle.exact_matrices)[0] == p1_exact(), "first matrix != P1");
    const auto U = families::uab_matrix(1, 0);
    const double ll0 = em::log_likelihood(U, to_real(p1_exact()));
    double worst_fp = 0.0, worst_ll = 0.0;
    for (const auto& M : *mle.exact_matrices) {
        const RealMatrix P = to_real(M);
        const RealMatrix R = em::gradient_matrix(U, P);
        const auto f = rank3::nonneg_rank3_factorize(M);
        const auto theta = em::parameters_from_factors(to_real(f.A), to_real(f.B));
        worst_fp = std::max(worst_fp, em::fixed_point_residual(theta, R).max());
        worst_ll = std::max(worst_ll, std::fabs(em::log_likelihood(U, P) - ll0));
        o.require(boundary::boundary_test(M).status == boundary::Status::boundary, "not boundary");
        o.require(!em::is_critical(P, R, U.u_plus()).critical, "critical");
    }
    o.require(worst_fp < 1e-10, "fixed-point residual");
    o.require(worst_ll < 1e-10, "log-likelihoods differ");
    o.note << " t=4/3, max fixed-point residual " << worst_fp;
}

void c4(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto U = families::uab_matrix(1, 0);
    const auto runs = em::best_of_restarts(U, 3, 7, 100);
    const double ll0 = em::log_likelihood(U, to_real(p1_exact()));
    const RealMatrix base = to_real(p1_exact());
    std::size_t hits = 0;
    for (const auto& P : runs.estimates) hits += in_p1_orbit(P, base, 1e-6);
    o.require(std::fabs(runs.best.loglik() - ll0) < 1e-6, "best loglik");
    o.require(runs.best.loglik() <= ll0 + 1e-8, "best exceeds closed form");
    o.require(hits >= 90, "orbit hits");
    const double s = seconds_since(t0);
    o.require(s < 120.0, "runtime");
    o.note << " " << hits << "/100 restarts in the P1 orbit (" << s << " s)";
}

void c5(Outcome& o) {
    struct Shape {
        std::size_t m, n, r;
    };
    std::size_t traces = 0, interior = 0;
    double worst = 0.0;
    for (const Shape sh : {Shape{3, 3, 2}, Shape{4, 4, 3}, Shape{5, 5, 3}}) {
        for (std::uint64_t t = 0; t < 100; ++t) {
            Rng rng(derive_seed(5000 + sh.m * 10 + sh.r, t));
            em::Counts C(sh.m, sh.n);
            for (auto& v : C.data()) v = uniform_int(rng, 1, 100);
            const em::DataMatrix U(C);
            const auto res = em::run_em(U, sh.r, rng());
            ++traces;
            for (std::size_t k = 1; k < res.loglik_trace.size(); ++k)
                if (res.loglik_trace[k] < res.loglik_trace[k - 1] - 1e-9) {
                    o.require(false, "decreasing trace");
                    break;
                }
            // interior optimum: converged with every factor entry bounded away from zero
            double lo = 1.0;
            for (double v : res.params.A.data()) lo = std::min(lo, v);
            for (double v : res.params.B.data()) lo = std::min(lo, v);
            for (double v : res.params.lambda) lo = std::min(lo, v);
            if (!res.converged || lo < 1e-3) continue;
            ++interior;
            const double r = std::max(res.criticality.ptr_residual, res.criticality.rpt_residual) / U.u_plus();
            worst = std::max(worst, r);
            o.require(r < 1e-6, "duality residual");
        }
    }
    o.note << " " << traces << " traces, " << interior << " interior optima, max residual/u++ " << worst;
}

void c6(Outcome& o) {
    const auto oracle = mixrank::testing::six_three_oracle();
    o.require(oracle.monomials() == 330, "monomials=" + std::to_string(oracle.monomials()));
    Rng rng(6);
    for (int t = 0; t < 100; ++t) {
        const auto A = mixrank::testing::random_matrix(4, 3, rng, -9, 9, 7);
        const auto B = mixrank::testing::random_matrix(3, 4, rng, -9, 9, 7);
        if (rank3::meet_join(A, B, 0, 1, 2, 3) != rank3::meet_join_expanded(A, B, 0, 1, 2, 3)) {
            o.require(false, "meet_join");
            break;
        }
    }
    for (int t = 0; t < 50; ++t) {
        const auto A = mixrank::testing::random_matrix(4, 3, rng, -7, 7, 6);
        const auto B = mixrank::testing::random_matrix(3, 3, rng, -7, 7, 6);
        std::vector<Rational> x;
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < 3; ++c) x.push_back(A(r, c));
        for (std::size_t v = 0; v < 3; ++v)
            for (std::size_t c = 0; c < 3; ++c) x.push_back(B(c, v));
        if (rank3::six_three(A, B, 0, 1, 2, 3, 0, 1, 2) != oracle.eval(x)) {
            o.require(false, "six_three");
            break;
        }
    }
    o.note << " 330 monomials";
}

void c7(Outcome& o) {
    const RationalMatrix E{{6, 13, 3, 1}, {4, 16, 6, 2}, {12, 4, 8, 12}, {5, 9, 10, 9}};
    o.require(boundary::boundary_test(canonical(E / Rational(120))).status == boundary::Status::boundary, "touching matrix");
    const auto G = families::greencurve_matrix(Rational(0), Rational(0));
    o.require(determinant(G) == 0, "det P(0,0)");
    o.require(boundary::boundary_test(canonical(G / G.sum())).status == boundary::Status::boundary, "P(0,0)");
    const RationalMatrix R1{{1, 2, 3}, {2, 4, 6}, {3, 6, 9}};
    o.require(boundary::boundary_test(R1).status == boundary::Status::interior, "rank one");
    o.note << " touching matrix and P(0,0) boundary, rank one interior";
}

void c8(Outcome& o) {
    const auto c = boundary::component_count(4, 4);
    o.require(c.zero_entry == 16 && c.kind_a == 144 && c.kind_b == 144 && c.total == 304, "(4,4) counts");
    for (std::size_t m = 4; m <= 12; ++m)
        for (std::size_t n = 4; n <= 12; ++n) {
            const auto k = boundary::component_count(m, n);
            o.require(k.zero_entry + k.kind_a + k.kind_b == k.total, "split identity");
            o.require(k.stratum_dimension == static_cast<long>(3 * m + 3 * n - 11), "dimension");
        }
    o.note << " 304 = 16 + 144 + 144, dimension 13";
}

harness::ExperimentConfig desk(std::size_t m, std::size_t n, std::size_t r) {
    harness::ExperimentConfig c;
    c.m = m;
    c.n = n;
    c.r = r;
    c.num_matrices = 200;
    c.num_restarts = 100;
    c.max_iter = 500;
    c.seed = 7;
    return c;
}

void c9(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto a = harness::table1_experiment(desk(4, 4, 3));
    const auto b = harness::table1_experiment(desk(5, 5, 3));
    o.require(a.fraction >= 0.01 && a.fraction <= 0.10, "(4,4,3) fraction");
    o.require(b.fraction >= 0.13 && b.fraction <= 0.33, "(5,5,3) fraction");
    const double s = seconds_since(t0);
    o.require(s < 1800.0, "runtime");
    o.note << " (4,4,3) " << a.fraction << ", (5,5,3) " << b.fraction << "; geometric exceptions "
           << a.inconsistent << "+" << b.inconsistent << " (" << s << " s)";
}

void c10(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto a = harness::planted_experiment(desk(4, 4, 3), 10);
    const auto b = harness::planted_experiment(desk(4, 4, 3), 25);
    o.require(a.fraction >= 0.07 && a.fraction <= 0.20, "T=10 fraction");
    o.require(b.fraction < 0.05, "T=25 fraction");
    const double s = seconds_since(t0);
    o.require(s < 1200.0, "runtime");
    o.note << " T=10 " << a.fraction << ", T=25 " << b.fraction << " (" << s << " s)";
}

void c11(Outcome& o) {
    auto cfg = desk(4, 4, 3);
    cfg.num_matrices = 2000;
    const auto q = harness::boundary_fraction_experiment(cfg, boundary::EntryDistribution::rational(100));
    cfg.num_matrices = 1000;
    const auto z = harness::boundary_fraction_experiment(cfg, boundary::EntryDistribution::small_integer(1, 4));
    cfg.num_matrices = 2000;
    const auto u = harness::boundary_fraction_experiment(cfg, boundary::EntryDistribution::unit_interval(100));
    o.require(q.fraction > 0.01 && q.fraction < 0.15, "rational fraction");
    o.require(z.fraction < 0.02, "integer fraction");
    o.require(q.non_members + z.non_members + u.non_members == 0, "membership");
    o.note << " rational(N=100) " << q.flagged << "/2000, integers 1..4 " << z.flagged
           << "/1000; unit_interval(N=100) " << u.flagged << "/2000 for reference";
}

void c12(Outcome& o) {
    Rng rng(12);
    std::size_t accepted = 0;
    for (int t = 0; t < 500; ++t) {
        const std::size_t m = 3 + t % 4, n = 3 + (t / 4) % 4;
        RationalMatrix A(m, 3), B(3, n);
        for (auto& v : A.data()) v = mixrank::testing::random_q(rng, 0, 9, 4);
        for (auto& v : B.data()) v = mixrank::testing::random_q(rng, 0, 9, 4);
        const RationalMatrix P = canonical(A * B);
        const bool in = rank3::is_member(rank3::membership_of_factorization(A, B).verdict) &&
                        rank3::is_member(rank3::nnrank3_membership(P).verdict) &&
                        rank3::is_member(rank3::nnrank3_membership(P.transpose()).verdict) &&
                        rank3::is_member(rank3::nnrank3_membership(canonical(P * Rational(7, 11))).verdict);
        if (!in) {
            o.require(false, "product " + std::to_string(t) + " rejected");
            continue;
        }
        ++accepted;
        const auto f = rank3::nonneg_rank3_factorize(P);
        if (f.A * f.B != P || !all_nonnegative(f.A) || !all_nonnegative(f.B))
            o.require(false, "factorization " + std::to_string(t));
    }
    o.note << " " << accepted << "/500 accepted and factorized exactly";
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
        {"membership anchors", c1},  {"threshold sweep", c2},       {"closed-form MLE", c3},
        {"EM consistency", c4},      {"monotonicity", c5},          {"bracket identities", c6},
        {"boundary anchors", c7},    {"count anchors", c8},         {"random tables", c9},
        {"planted experiment", c10}, {"boundary fraction", c11},    {"property suites", c12},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            criteria[k].second(o);
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        std::printf("%s %zu %s:%s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                    o.note.str().c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed ? 1 : 0;
}
