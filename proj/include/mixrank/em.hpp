#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mixrank/errors.hpp"
#include "mixrank/exactla/linalg.hpp"
#include "mixrank/exactla/matrix.hpp"
#include "mixrank/parallel.hpp"
#include "mixrank/random.hpp"

// Expectation maximization for the rank-r mixture of two discrete variables,
// P = A * diag(lambda) * B, together with the fixed-point and criticality
// diagnostics used to tell interior optima from boundary optima.

namespace mixrank::em {

using Counts = Matrix<std::int64_t>;

// Nonnegative integer count table with positive total.
class DataMatrix {
  public:
    explicit DataMatrix(Counts counts) : counts_(std::move(counts)) {
        if (counts_.empty()) throw DimensionError("DataMatrix: empty table");
        total_ = 0;
        for (auto v : counts_.data()) {
            if (v < 0) throw DomainError("DataMatrix: negative count");
            total_ += v;
        }
        if (total_ <= 0) throw DomainError("DataMatrix: total count must be positive");
    }

    // Accepts a rational matrix whose entries are nonnegative integers.
    static DataMatrix from_rational(const RationalMatrix& M) {
        Counts c(M.rows(), M.cols());
        for (std::size_t i = 0; i < M.rows(); ++i)
            for (std::size_t j = 0; j < M.cols(); ++j) {
                const Rational& q = M(i, j);
                if (q.get_den() != 1 || !q.get_num().fits_slong_p())
                    throw DomainError("DataMatrix: entries must be integers");
                c(i, j) = q.get_num().get_si();
            }
        return DataMatrix(std::move(c));
    }

    std::size_t rows() const noexcept { return counts_.rows(); }
    std::size_t cols() const noexcept { return counts_.cols(); }
    double u(std::size_t i, std::size_t j) const { return static_cast<double>(counts_(i, j)); }
    double u_plus() const noexcept { return static_cast<double>(total_); }
    std::int64_t total() const noexcept { return total_; }
    const Counts& counts() const noexcept { return counts_; }
    bool strictly_positive() const {
        return std::all_of(counts_.data().begin(), counts_.data().end(),
                           [](std::int64_t v) { return v > 0; });
    }

  private:
    Counts counts_;
    std::int64_t total_ = 0;
};

// A: m x r with stochastic columns, lambda: r mixture weights, B: r x n with
// stochastic rows.
struct ParameterTriple {
    RealMatrix A;
    std::vector<double> lambda;
    RealMatrix B;

    std::size_t rank() const noexcept { return lambda.size(); }

    RealMatrix product() const {
        RealMatrix P(A.rows(), B.cols());
        for (std::size_t i = 0; i < A.rows(); ++i)
            for (std::size_t k = 0; k < lambda.size(); ++k) {
                const double w = A(i, k) * lambda[k];
                if (w == 0.0) continue;
                for (std::size_t j = 0; j < B.cols(); ++j) P(i, j) += w * B(k, j);
            }
        return P;
    }

    // Largest violation of the stochasticity constraints.
    double stochasticity_error() const {
        double err = 0.0, ls = 0.0;
        for (std::size_t k = 0; k < lambda.size(); ++k) {
            double cs = 0.0, rs = 0.0;
            for (std::size_t i = 0; i < A.rows(); ++i) {
                cs += A(i, k);
                err = std::max(err, -A(i, k));
            }
            for (std::size_t j = 0; j < B.cols(); ++j) {
                rs += B(k, j);
                err = std::max(err, -B(k, j));
            }
            err = std::max({err, std::fabs(cs - 1.0), std::fabs(rs - 1.0), -lambda[k]});
            ls += lambda[k];
        }
        return std::max(err, std::fabs(ls - 1.0));
    }
};

inline ParameterTriple random_parameters(std::size_t m, std::size_t r, std::size_t n, Rng& rng) {
    ParameterTriple t{RealMatrix(m, r), sample_simplex(rng, r), RealMatrix(r, n)};
    for (std::size_t k = 0; k < r; ++k) {
        auto a = sample_simplex(rng, m);
        for (std::size_t i = 0; i < m; ++i) t.A(i, k) = a[i];
    }
    for (std::size_t k = 0; k < r; ++k) {
        auto b = sample_simplex(rng, n);
        for (std::size_t j = 0; j < n; ++j) t.B(k, j) = b[j];
    }
    return t;
}

/**
 * Stochastic parameters from an arbitrary nonnegative factorization P = F * G.
 * Components with a zero column of F or zero row of G are dropped into
 * uniform columns/rows with zero weight.
 */
inline ParameterTriple parameters_from_factors(const RealMatrix& F, const RealMatrix& G) {
    const std::size_t m = F.rows(), r = F.cols(), n = G.cols();
    ParameterTriple t{RealMatrix(m, r), std::vector<double>(r, 0.0), RealMatrix(r, n)};
    double total = 0.0;
    for (std::size_t k = 0; k < r; ++k) {
        double cs = 0.0, rs = 0.0;
        for (std::size_t i = 0; i < m; ++i) cs += F(i, k);
        for (std::size_t j = 0; j < n; ++j) rs += G(k, j);
        if (cs > 0.0 && rs > 0.0) {
            for (std::size_t i = 0; i < m; ++i) t.A(i, k) = F(i, k) / cs;
            for (std::size_t j = 0; j < n; ++j) t.B(k, j) = G(k, j) / rs;
            t.lambda[k] = cs * rs;
        } else {
            for (std::size_t i = 0; i < m; ++i) t.A(i, k) = 1.0 / static_cast<double>(m);
            for (std::size_t j = 0; j < n; ++j) t.B(k, j) = 1.0 / static_cast<double>(n);
        }
        total += t.lambda[k];
    }
    for (auto& l : t.lambda) l /= total;
    return t;
}

// v(i, k, j): expected count of cell (i, j) attributed to hidden state k.
class ResponsibilityTensor {
  public:
    ResponsibilityTensor(std::size_t m, std::size_t r, std::size_t n)
        : m_(m), r_(r), n_(n), v_(m * r * n, 0.0) {}

    double& operator()(std::size_t i, std::size_t k, std::size_t j) {
        return v_[(i * r_ + k) * n_ + j];
    }
    double operator()(std::size_t i, std::size_t k, std::size_t j) const {
        return v_[(i * r_ + k) * n_ + j];
    }
    std::size_t rows() const noexcept { return m_; }
    std::size_t rank() const noexcept { return r_; }
    std::size_t cols() const noexcept { return n_; }

  private:
    std::size_t m_, r_, n_;
    std::vector<double> v_;
};

inline void require_shape(const DataMatrix& U, const RealMatrix& P, const char* what) {
    if (U.rows() != P.rows() || U.cols() != P.cols())
        throw DimensionError(std::string(what) + ": data and model shapes differ");
}

// sum_ij u_ij log p_ij. Cells with u_ij = 0 contribute nothing; a positive
// count on a zero-probability cell yields -infinity.
inline double log_likelihood(const DataMatrix& U, const RealMatrix& P) {
    require_shape(U, P, "log_likelihood");
    double ll = 0.0;
    for (std::size_t i = 0; i < U.rows(); ++i)
        for (std::size_t j = 0; j < U.cols(); ++j) {
            const double u = U.u(i, j);
            if (u == 0.0) continue;
            if (!(P(i, j) > 0.0)) return -std::numeric_limits<double>::infinity();
            ll += u * std::log(P(i, j));
        }
    return ll;
}

inline ResponsibilityTensor e_step(const DataMatrix& U, const ParameterTriple& theta) {
    const std::size_t m = theta.A.rows(), r = theta.rank(), n = theta.B.cols();
    if (U.rows() != m || U.cols() != n || theta.A.cols() != r || theta.B.rows() != r)
        throw DimensionError("e_step: shape mismatch");
    ResponsibilityTensor V(m, r, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double denom = 0.0;
            for (std::size_t k = 0; k < r; ++k)
                denom += theta.A(i, k) * theta.lambda[k] * theta.B(k, j);
            if (denom <= 0.0) continue; // fraction taken as 0
            const double scale = U.u(i, j) / denom;
            for (std::size_t k = 0; k < r; ++k)
                V(i, k, j) = theta.A(i, k) * theta.lambda[k] * theta.B(k, j) * scale;
        }
    return V;
}

struct MStepResult {
    ParameterTriple params;
    std::vector<std::size_t> empty_components; // lambda_k == 0, filled uniformly
};

inline MStepResult m_step(const ResponsibilityTensor& V, double u_plus) {
    if (!(u_plus > 0.0)) throw DomainError("m_step: u_plus must be positive");
    const std::size_t m = V.rows(), r = V.rank(), n = V.cols();
    MStepResult out{{RealMatrix(m, r), std::vector<double>(r, 0.0), RealMatrix(r, n)}, {}};
    auto& t = out.params;
    for (std::size_t k = 0; k < r; ++k) {
        double mass = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += V(i, k, j);
            t.A(i, k) = s;
            mass += s;
        }
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) s += V(i, k, j);
            t.B(k, j) = s;
        }
        t.lambda[k] = mass / u_plus;
        if (mass > 0.0) {
            for (std::size_t i = 0; i < m; ++i) t.A(i, k) /= mass;
            for (std::size_t j = 0; j < n; ++j) t.B(k, j) /= mass;
        } else {
            for (std::size_t i = 0; i < m; ++i) t.A(i, k) = 1.0 / static_cast<double>(m);
            for (std::size_t j = 0; j < n; ++j) t.B(k, j) = 1.0 / static_cast<double>(n);
            out.empty_components.push_back(k);
        }
    }
    return out;
}

// r_ij = u_++ - u_ij / p_ij, with r_ij = u_++ on cells where u_ij = 0.
inline RealMatrix gradient_matrix(const DataMatrix& U, const RealMatrix& P) {
    require_shape(U, P, "gradient_matrix");
    RealMatrix R(U.rows(), U.cols());
    const double up = U.u_plus();
    for (std::size_t i = 0; i < U.rows(); ++i)
        for (std::size_t j = 0; j < U.cols(); ++j) {
            const double u = U.u(i, j);
            if (u == 0.0) {
                R(i, j) = up;
                continue;
            }
            if (!(P(i, j) > 0.0))
                throw NumericError("gradient_matrix: zero probability on an observed cell");
            R(i, j) = up - u / P(i, j);
        }
    return R;
}

struct FixedPointResidual {
    double a_side = 0.0; // max |A * (R B^T)|
    double b_side = 0.0; // max |B * (A^T R)|
    double max() const { return std::max(a_side, b_side); }
};

inline FixedPointResidual fixed_point_residual(const ParameterTriple& theta, const RealMatrix& R) {
    const RealMatrix& A = theta.A;
    const RealMatrix& B = theta.B;
    if (R.rows() != A.rows() || R.cols() != B.cols() || A.cols() != B.rows())
        throw DimensionError("fixed_point_residual: shape mismatch");
    const RealMatrix RBt = R * B.transpose();
    const RealMatrix AtR = A.transpose() * R;
    FixedPointResidual res;
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t k = 0; k < A.cols(); ++k)
            res.a_side = std::max(res.a_side, std::fabs(A(i, k) * RBt(i, k)));
    for (std::size_t k = 0; k < B.rows(); ++k)
        for (std::size_t j = 0; j < B.cols(); ++j)
            res.b_side = std::max(res.b_side, std::fabs(B(k, j) * AtR(k, j)));
    return res;
}

struct Criticality {
    bool critical = false;
    double ptr_residual = 0.0; // max |P^T R|
    double rpt_residual = 0.0; // max |R P^T|
    double threshold = 0.0;    // rel_tol * u_++ * max p_ij
    std::size_t rank_p = 0;
};

inline constexpr double kDefaultCriticalTol = 1e-6;

/**
 * Duality test for criticality: at a rank-r point, R is normal to the
 * rank-r variety iff P^T R = 0 and R P^T = 0. Needs no factorization of P.
 */
inline Criticality is_critical(const RealMatrix& P, const RealMatrix& R, double u_plus,
                               double rel_tol = kDefaultCriticalTol) {
    if (P.rows() != R.rows() || P.cols() != R.cols())
        throw DimensionError("is_critical: shape mismatch");
    Criticality c;
    c.ptr_residual = max_abs(P.transpose() * R);
    c.rpt_residual = max_abs(R * P.transpose());
    c.threshold = rel_tol * u_plus * max_abs(P);
    c.critical = c.ptr_residual < c.threshold && c.rpt_residual < c.threshold;
    c.rank_p = matrix_rank(P);
    return c;
}

struct EmOptions {
    std::size_t max_iter = 2000;
    double tol = 1e-10;                    // on max |delta p_ij|
    double crit_tol = kDefaultCriticalTol; // relative criticality tolerance
};

struct EMResult {
    ParameterTriple params;
    RealMatrix estimate;
    std::vector<double> loglik_trace;
    std::size_t iterations = 0;
    bool converged = false;
    bool monotone = true;
    FixedPointResidual fixed_point;
    Criticality criticality;
    std::vector<std::size_t> empty_components;
    std::optional<std::uint64_t> seed;

    double loglik() const { return loglik_trace.back(); }
};

namespace detail {

// One E-step plus M-step without materializing the responsibility tensor.
// `P` must hold theta.product() on entry.
inline void em_round(const DataMatrix& U, ParameterTriple& theta, const RealMatrix& P,
                     RealMatrix& ratio, std::vector<std::size_t>& empty) {
    const std::size_t m = U.rows(), n = U.cols(), r = theta.rank();
    const double up = U.u_plus();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double u = U.u(i, j);
            ratio(i, j) = (u > 0.0 && P(i, j) > 0.0) ? u / P(i, j) : 0.0;
        }
    RealMatrix& A = theta.A;
    RealMatrix& B = theta.B;
    double rowacc[64];
    std::vector<double> colacc_buf(n > 64 ? n : 0);
    double* colacc = n > 64 ? colacc_buf.data() : rowacc;
    std::vector<double> sbuf(m);
    for (std::size_t k = 0; k < r; ++k) {
        const double lk = theta.lambda[k];
        // column sums over i of a_ik * ratio_ij, for the B update
        for (std::size_t j = 0; j < n; ++j) colacc[j] = 0.0;
        double mass = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double aik = A(i, k);
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                s += B(k, j) * ratio(i, j);
                colacc[j] += aik * ratio(i, j);
            }
            sbuf[i] = aik * lk * s;
            mass += sbuf[i];
        }
        theta.lambda[k] = mass / up;
        if (mass > 0.0) {
            for (std::size_t i = 0; i < m; ++i) A(i, k) = sbuf[i] / mass;
            for (std::size_t j = 0; j < n; ++j) B(k, j) = lk * B(k, j) * colacc[j] / mass;
        } else {
            for (std::size_t i = 0; i < m; ++i) A(i, k) = 1.0 / static_cast<double>(m);
            for (std::size_t j = 0; j < n; ++j) B(k, j) = 1.0 / static_cast<double>(n);
            if (std::find(empty.begin(), empty.end(), k) == empty.end()) empty.push_back(k);
        }
    }
}

} // namespace detail

inline void finalize_diagnostics(const DataMatrix& U, EMResult& res, double crit_tol) {
    const RealMatrix R = gradient_matrix(U, res.estimate);
    res.fixed_point = fixed_point_residual(res.params, R);
    res.criticality = is_critical(res.estimate, R, U.u_plus(), crit_tol);
}

/**
 * Runs EM from `init` until max |delta P| < tol or max_iter rounds.
 * loglik_trace holds the initial value followed by one value per round.
 */
inline EMResult run_em(const DataMatrix& U, const ParameterTriple& init, const EmOptions& opts = {}) {
    const std::size_t r = init.rank();
    if (init.A.rows() != U.rows() || init.B.cols() != U.cols() || init.A.cols() != r ||
        init.B.rows() != r)
        throw DimensionError("run_em: initial parameters do not match the data shape");
    EMResult res;
    res.params = init;
    res.estimate = init.product();
    double ll = log_likelihood(U, res.estimate);
    if (!std::isfinite(ll))
        throw NumericError("run_em: initial parameters give zero probability to observed cells");
    res.loglik_trace.reserve(opts.max_iter + 1);
    res.loglik_trace.push_back(ll);
    RealMatrix ratio(U.rows(), U.cols());
    RealMatrix next(U.rows(), U.cols());
    for (std::size_t it = 1; it <= opts.max_iter; ++it) {
        detail::em_round(U, res.params, res.estimate, ratio, res.empty_components);
        next = res.params.product();
        double delta = 0.0;
        for (std::size_t k = 0; k < next.size(); ++k)
            delta = std::max(delta, std::fabs(next.data()[k] - res.estimate.data()[k]));
        std::swap(res.estimate, next);
        const double nll = log_likelihood(U, res.estimate);
        if (!std::isfinite(nll))
            throw NumericError("run_em: non-finite log-likelihood at iteration " + std::to_string(it));
        if (nll < ll - 1e-9 * std::max(1.0, std::fabs(ll))) res.monotone = false;
        ll = nll;
        res.loglik_trace.push_back(ll);
        res.iterations = it;
        if (delta < opts.tol) {
            res.converged = true;
            break;
        }
    }
    finalize_diagnostics(U, res, opts.crit_tol);
    return res;
}

inline EMResult run_em(const DataMatrix& U, std::size_t r, std::uint64_t seed,
                       const EmOptions& opts = {}) {
    if (r == 0) throw DomainError("run_em: rank must be positive");
    Rng rng(seed);
    auto init = random_parameters(U.rows(), r, U.cols(), rng);
    auto res = run_em(U, init, opts);
    res.seed = seed;
    return res;
}

struct RestartSummary {
    EMResult best;
    std::size_t best_index = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<double> logliks;       // final log-likelihood of each restart
    std::vector<RealMatrix> estimates; // final P of each restart
};

/**
 * `restarts` independent EM runs with seeds derive_seed(master_seed, k).
 * The best run is the one with the largest final log-likelihood; ties go to
 * the lowest restart index.
 */
inline RestartSummary best_of_restarts(const DataMatrix& U, std::size_t r,
                                       std::uint64_t master_seed, std::size_t restarts,
                                       const EmOptions& opts = {}, std::size_t threads = 0) {
    if (restarts == 0) throw DomainError("best_of_restarts: need at least one restart");
    auto runs = parallel_map<EMResult>(
        restarts,
        [&](std::size_t k) { return run_em(U, r, derive_seed(master_seed, k), opts); },
        threads);
    RestartSummary out;
    for (std::size_t k = 0; k < restarts; ++k) {
        out.seeds.push_back(*runs[k].seed);
        out.logliks.push_back(runs[k].loglik());
        out.estimates.push_back(runs[k].estimate);
        if (runs[k].loglik() > runs[out.best_index].loglik()) out.best_index = k;
    }
    out.best = std::move(runs[out.best_index]);
    return out;
}

} // namespace mixrank::em
