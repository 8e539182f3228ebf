#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mixrank/boundary.hpp"
#include "mixrank/em.hpp"
#include "mixrank/errors.hpp"
#include "mixrank/parallel.hpp"
#include "mixrank/random.hpp"

// Seeded Monte-Carlo experiments: random data tables, planted
// factorizations, and sampling on a boundary stratum.

namespace mixrank::harness {

enum class Mode { table1, planted, boundary_fraction };

inline const char* to_string(Mode m) {
    switch (m) {
    case Mode::table1: return "table1";
    case Mode::planted: return "planted";
    case Mode::boundary_fraction: return "boundary_fraction";
    }
    return "?";
}

struct ExperimentConfig {
    Mode mode = Mode::table1;
    std::size_t m = 4, n = 4, r = 3;
    std::size_t num_matrices = 200;
    std::size_t num_restarts = 100;
    std::size_t max_iter = 500;
    double tol = 1e-10;
    double crit_tol = em::kDefaultCriticalTol;
    std::uint64_t seed = 7;
    double scale = 1e6;          // table1: simplex draw times scale, rounded
    bool iid_uniform = false;    // table1: iid uniform entries, normalized, instead of the simplex
    std::size_t planted_T = 10;  // planted: sample size T*m*n
    long planted_max = 100;      // planted: factor entries in 0..planted_max
    boundary::EntryDistribution dist = boundary::EntryDistribution::rational(100);
    double snap_tol = 1e-4;      // consistency check: factor entries below this are zeroed
    std::size_t polish_iter = 20000; // extra EM rounds continuing the best restart
    std::size_t threads = 0;     // 0 = hardware concurrency

    void validate() const {
        if (m == 0 || n == 0 || num_matrices == 0) throw DomainError("experiment: empty configuration");
        if (mode != Mode::boundary_fraction) {
            if (r == 0 || r >= std::min(m, n)) throw DomainError("experiment: need 0 < r < min(m, n)");
            if (num_restarts == 0 || max_iter == 0) throw DomainError("experiment: restarts and iterations must be positive");
        } else if (m < 3 || n < 4) {
            throw DomainError("experiment: boundary_fraction needs m >= 3 and n >= 4");
        }
    }

    em::EmOptions em_options() const { return {max_iter, tol, crit_tol}; }
};

struct TrialRecord {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    bool flagged = false;
    // EM modes
    double best_loglik = 0.0;
    double ptr_residual = 0.0, rpt_residual = 0.0, threshold = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
    std::string geometric; // boundary_test on the snapped estimate
    bool consistent = true;
    // boundary_fraction mode
    bool member = true;
    std::string reason;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<TrialRecord> records;
    std::size_t flagged = 0;
    std::size_t inconsistent = 0;     // flagged yet classified interior
    std::size_t non_members = 0;      // boundary_fraction: samples failing membership
    double fraction = 0.0;
    double runtime_seconds = 0.0;

    std::string to_csv() const;
    nlohmann::json to_json() const;
};

namespace detail {

inline em::DataMatrix table1_data(const ExperimentConfig& cfg, Rng& rng) {
    std::vector<double> x;
    if (cfg.iid_uniform) {
        x.resize(cfg.m * cfg.n);
        double s = 0.0;
        for (auto& v : x) s += (v = open_unit(rng));
        for (auto& v : x) v /= s;
    } else {
        x = sample_simplex(rng, cfg.m * cfg.n);
    }
    em::Counts U(cfg.m, cfg.n);
    for (std::size_t k = 0; k < x.size(); ++k) U.data()[k] = std::llround(x[k] * cfg.scale);
    return em::DataMatrix(std::move(U));
}

inline std::vector<std::int64_t> multinomial(Rng& rng, std::int64_t total, const std::vector<double>& p) {
    std::vector<std::int64_t> out(p.size(), 0);
    double rest = 1.0;
    std::int64_t left = total;
    for (std::size_t k = 0; k + 1 < p.size() && left > 0; ++k) {
        const double q = rest > 0 ? std::clamp(p[k] / rest, 0.0, 1.0) : 0.0;
        std::binomial_distribution<std::int64_t> bin(left, q);
        out[k] = bin(rng);
        left -= out[k];
        rest -= p[k];
    }
    if (!p.empty()) out.back() += left;
    return out;
}

inline em::DataMatrix planted_data(const ExperimentConfig& cfg, Rng& rng) {
    for (;;) {
        RealMatrix A(cfg.m, cfg.r), B(cfg.r, cfg.n);
        for (auto& v : A.data()) v = static_cast<double>(uniform_int(rng, 0, cfg.planted_max));
        for (auto& v : B.data()) v = static_cast<double>(uniform_int(rng, 0, cfg.planted_max));
        RealMatrix P = A * B;
        const double s = P.sum();
        if (s <= 0) continue;
        std::vector<double> p(P.data());
        for (auto& v : p) v /= s;
        const auto counts = multinomial(rng, static_cast<std::int64_t>(cfg.planted_T * cfg.m * cfg.n), p);
        return em::DataMatrix(em::Counts(cfg.m, cfg.n, counts));
    }
}

// Exact rank <= r matrix from the EM factors, small entries set to zero.
inline RationalMatrix snapped_estimate(const em::ParameterTriple& t, double snap_tol) {
    RealMatrix A = t.A, B = t.B;
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t k = 0; k < A.cols(); ++k) A(i, k) *= t.lambda[k];
    auto snap = [&](RealMatrix& M) {
        const double s = max_abs(M);
        for (auto& v : M.data())
            if (v < snap_tol * s) v = 0.0;
    };
    snap(A);
    snap(B);
    return canonical(promote(A) * promote(B));
}

inline TrialRecord em_trial(const ExperimentConfig& cfg, std::size_t i) {
    TrialRecord rec;
    rec.index = i;
    rec.seed = derive_seed(cfg.seed, i);
    Rng rng(derive_seed(rec.seed, 0));
    const em::DataMatrix U = cfg.mode == Mode::table1 ? table1_data(cfg, rng) : planted_data(cfg, rng);
    const auto runs = em::best_of_restarts(U, cfg.r, derive_seed(rec.seed, 1), cfg.num_restarts,
                                           cfg.em_options(), 1);
    em::EMResult best = runs.best;
    if (cfg.polish_iter > 0 && !best.converged) {
        auto opts = cfg.em_options();
        opts.max_iter = cfg.polish_iter;
        auto more = em::run_em(U, best.params, opts);
        more.iterations += best.iterations;
        best = std::move(more);
    }
    rec.best_loglik = best.loglik();
    rec.flagged = !best.criticality.critical;
    rec.ptr_residual = best.criticality.ptr_residual;
    rec.rpt_residual = best.criticality.rpt_residual;
    rec.threshold = best.criticality.threshold;
    rec.converged = best.converged;
    rec.iterations = best.iterations;
    if (rec.flagged && cfg.r == 3) {
        try {
            const auto c = boundary::boundary_test(snapped_estimate(best.params, cfg.snap_tol));
            rec.geometric = boundary::to_string(c.status);
            rec.consistent = c.status != boundary::Status::interior;
        } catch (const std::exception&) {
            rec.geometric = "error";
            rec.consistent = false;
        }
    }
    return rec;
}

inline TrialRecord boundary_trial(const ExperimentConfig& cfg, const boundary::ZeroPattern& pattern,
                                  std::size_t i) {
    TrialRecord rec;
    rec.index = i;
    rec.seed = derive_seed(cfg.seed, i);
    Rng rng(rec.seed);
    const auto s = boundary::sample_algebraic_boundary(pattern, rng, cfg.dist);
    const auto c = boundary::boundary_test(s.P);
    rec.flagged = c.status == boundary::Status::boundary;
    rec.member = c.status != boundary::Status::outside_model;
    rec.geometric = boundary::to_string(c.status);
    rec.reason = boundary::to_string(c.reason);
    return rec;
}

inline std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

} // namespace detail

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    ExperimentReport rep;
    rep.config = cfg;
    if (cfg.mode == Mode::boundary_fraction) {
        const auto pattern = boundary::reference_pattern(cfg.m, cfg.n);
        rep.records = parallel_map<TrialRecord>(
            cfg.num_matrices, [&](std::size_t i) { return detail::boundary_trial(cfg, pattern, i); },
            cfg.threads);
    } else {
        rep.records = parallel_map<TrialRecord>(
            cfg.num_matrices, [&](std::size_t i) { return detail::em_trial(cfg, i); }, cfg.threads);
    }
    for (const auto& r : rep.records) {
        rep.flagged += r.flagged;
        rep.inconsistent += !r.consistent;
        rep.non_members += !r.member;
    }
    rep.fraction = static_cast<double>(rep.flagged) / static_cast<double>(cfg.num_matrices);
    rep.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

inline ExperimentReport table1_experiment(ExperimentConfig cfg) {
    cfg.mode = Mode::table1;
    return run_experiment(cfg);
}

inline ExperimentReport planted_experiment(ExperimentConfig cfg, std::size_t T) {
    cfg.mode = Mode::planted;
    cfg.planted_T = T;
    return run_experiment(cfg);
}

inline ExperimentReport boundary_fraction_experiment(ExperimentConfig cfg,
                                                     const boundary::EntryDistribution& dist) {
    cfg.mode = Mode::boundary_fraction;
    cfg.dist = dist;
    return run_experiment(cfg);
}

inline std::string ExperimentReport::to_csv() const {
    std::ostringstream os;
    if (config.mode == Mode::boundary_fraction) {
        os << "index,seed,flagged,member,status,reason\n";
        for (const auto& r : records)
            os << r.index << ',' << r.seed << ',' << r.flagged << ',' << r.member << ',' << r.geometric
               << ',' << r.reason << '\n';
    } else {
        os << "index,seed,flagged,best_loglik,ptr_residual,rpt_residual,threshold,converged,iterations,"
              "geometric,consistent\n";
        for (const auto& r : records)
            os << r.index << ',' << r.seed << ',' << r.flagged << ',' << detail::fmt(r.best_loglik) << ','
               << detail::fmt(r.ptr_residual) << ',' << detail::fmt(r.rpt_residual) << ','
               << detail::fmt(r.threshold) << ',' << r.converged << ',' << r.iterations << ','
               << r.geometric << ',' << r.consistent << '\n';
    }
    return os.str();
}

inline nlohmann::json config_json(const ExperimentConfig& c) {
    nlohmann::json j{{"mode", to_string(c.mode)},
                     {"m", c.m},
                     {"n", c.n},
                     {"seed", c.seed},
                     {"num_matrices", c.num_matrices}};
    if (c.mode == Mode::boundary_fraction) {
        j["distribution"] = c.dist.name();
    } else {
        j["r"] = c.r;
        j["num_restarts"] = c.num_restarts;
        j["max_iter"] = c.max_iter;
        j["tol"] = c.tol;
        j["crit_tol"] = c.crit_tol;
        j["snap_tol"] = c.snap_tol;
        j["polish_iter"] = c.polish_iter;
        if (c.mode == Mode::table1) {
            j["scale"] = c.scale;
            j["draw"] = c.iid_uniform ? "iid_uniform" : "simplex";
        }
        else {
            j["T"] = c.planted_T;
            j["factor_max"] = c.planted_max;
        }
    }
    return j;
}

inline nlohmann::json ExperimentReport::to_json() const {
    nlohmann::json j{{"schema", "1"},
                     {"config", config_json(config)},
                     {"flagged", flagged},
                     {"total", records.size()},
                     {"fraction", fraction},
                     {"runtime_seconds", runtime_seconds}};
    if (config.mode == Mode::boundary_fraction) j["non_members"] = non_members;
    else j["inconsistent"] = inconsistent;
    return j;
}

} // namespace mixrank::harness
