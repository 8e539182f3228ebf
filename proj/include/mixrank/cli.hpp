#pragma once

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mixrank/boundary.hpp"
#include "mixrank/em.hpp"
#include "mixrank/errors.hpp"
#include "mixrank/exactla/linalg.hpp"
#include "mixrank/exactla/text_io.hpp"
#include "mixrank/families.hpp"
#include "mixrank/harness.hpp"
#include "mixrank/rank3cert/factorization.hpp"
#include "mixrank/rank3cert/membership.hpp"

// Command-line front end. dispatch() returns the process exit code:
// 0 success (in / interior), 1 out / boundary, 2 usage or input error,
// 3 numeric failure.

namespace mixrank::cli {

using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitNegative = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

namespace detail {

struct Loaded {
    ParsedMatrix parsed;
    Backend backend;
    bool promoted = false;
};

inline Loaded load(const std::string& path, const std::string& backend_flag) {
    Loaded l{read_matrix_file(path), Backend::exact};
    if (backend_flag.empty()) l.backend = l.parsed.default_backend();
    else if (backend_flag == "exact") l.backend = Backend::exact;
    else if (backend_flag == "float") l.backend = Backend::floating;
    else if (backend_flag == "promote") {
        l.backend = Backend::exact;
        l.promoted = true;
    } else throw DomainError("unknown backend '" + backend_flag + "'");
    return l;
}

inline const RationalMatrix& exact_of(const Loaded& l) {
    return l.promoted ? l.parsed.promoted : l.parsed.exact;
}

inline std::string backend_name(const Loaded& l) {
    return l.promoted ? "promote" : to_string(l.backend);
}

inline Rational parse_rational(const std::string& s) {
    auto p = parse_matrix_string(s);
    if (p.exact.rows() != 1 || p.exact.cols() != 1) throw DomainError("expected a single number, got '" + s + "'");
    return p.exact(0, 0);
}

template <typename T> json matrix_rows(const Matrix<T>& M) {
    // one text-format line per row
    json rows = json::array();
    for (std::size_t i = 0; i < M.rows(); ++i) {
        std::string row;
        for (std::size_t j = 0; j < M.cols(); ++j) {
            if (j) row += ',';
            row += ScalarTraits<T>::format(M(i, j));
        }
        rows.push_back(row);
    }
    return rows;
}

template <typename T> void write_to(const std::string& path, const Matrix<T>& M) {
    std::ofstream f(path);
    if (!f) throw ParseError(0, "cannot write '" + path + "'");
    write_matrix(f, M);
}

// out.csv -> out_3.csv
inline std::string indexed_path(const std::string& path, std::size_t k) {
    const auto dot = path.find_last_of('.');
    const auto slash = path.find_last_of('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return path + "_" + std::to_string(k);
    return path.substr(0, dot) + "_" + std::to_string(k) + path.substr(dot);
}

inline json witness_json(const rank3::Witness& w) {
    return {{"i", w.i}, {"j", w.j}, {"iprime", w.iprime}, {"jprime", w.jprime}, {"swapped", w.swapped}};
}

inline json membership_json(const rank3::MembershipDecision& d, const std::string& backend) {
    json j{{"schema", "1"},
           {"verdict", rank3::to_string(d.verdict)},
           {"witness", d.witness ? witness_json(*d.witness) : json(nullptr)},
           {"backend", backend},
           {"marginal", d.marginal},
           {"rank", d.rank}};
    return j;
}

inline json classification_json(const boundary::BoundaryClassification& c) {
    json ws = json::array();
    for (const auto& w : c.witnesses) {
        json e{{"witness", witness_json(w.witness)}, {"touching", w.touching}};
        if (w.touching) e["contact"] = {w.k, w.l, w.kprime};
        ws.push_back(e);
    }
    return {{"schema", "1"},
            {"status", boundary::to_string(c.status)},
            {"reason", boundary::to_string(c.reason)},
            {"rank", c.rank},
            {"witnesses", ws}};
}

struct Context {
    std::ostream& out;
    std::ostream& err;
};

// ---- subcommands ----

struct EmArgs {
    std::string input, output;
    std::size_t r = 3, restarts = 100, iterations = 2000;
    std::uint64_t seed = 7;
    double tol = 1e-10, crit_tol = em::kDefaultCriticalTol;
    std::size_t threads = 0;
};

inline int run_em_cmd(const EmArgs& a, Context& ctx) {
    const auto parsed = read_matrix_file(a.input);
    const auto U = em::DataMatrix::from_rational(parsed.exact);
    em::EmOptions opts{a.iterations, a.tol, a.crit_tol};
    const auto runs = em::best_of_restarts(U, a.r, a.seed, a.restarts, opts, a.threads);
    const auto& b = runs.best;
    if (!a.output.empty()) write_to(a.output, b.estimate);
    json j{{"schema", "1"},
           {"loglik", b.loglik()},
           {"best_restart", runs.best_index},
           {"seed", b.seed ? *b.seed : 0},
           {"iterations", b.iterations},
           {"converged", b.converged},
           {"monotone", b.monotone},
           {"critical", b.criticality.critical},
           {"ptr_residual", b.criticality.ptr_residual},
           {"rpt_residual", b.criticality.rpt_residual},
           {"threshold", b.criticality.threshold},
           {"fixed_point_residual", b.fixed_point.max()},
           {"estimate", matrix_rows(b.estimate)}};
    ctx.out << j.dump(2) << '\n';
    return kExitOk;
}

inline int run_nnrank3_cmd(const std::string& input, const std::string& backend, bool log, Context& ctx) {
    const auto l = load(input, backend);
    rank3::MembershipOptions opts;
    opts.log_failures = log;
    const auto d = l.backend == Backend::floating ? rank3::nnrank3_membership(l.parsed.real, opts)
                                                  : rank3::nnrank3_membership(exact_of(l), opts);
    json j = membership_json(d, backend_name(l));
    if (log) {
        json fl = json::array();
        for (const auto& f : d.failure_log) {
            json e{{"candidate", witness_json(f.candidate)}, {"condition", rank3::to_string(f.condition)}};
            if (f.k != rank3::npos) e["k"] = f.k;
            if (f.l != rank3::npos) e["l"] = f.l;
            if (f.kprime != rank3::npos) e["kprime"] = f.kprime;
            fl.push_back(e);
        }
        j["failure_log"] = fl;
    }
    ctx.out << j.dump(2) << '\n';
    return rank3::is_member(d.verdict) ? kExitOk : kExitNegative;
}

inline int run_factorize_cmd(const std::string& input, const std::string& backend, const std::string& out_a,
                             const std::string& out_b, Context& ctx) {
    const auto l = load(input, backend.empty() ? "exact" : backend);
    if (l.backend == Backend::floating) throw DomainError("factorize: requires the exact or promote backend");
    try {
        const auto f = rank3::nonneg_rank3_factorize(exact_of(l));
        if (!out_a.empty()) write_to(out_a, f.A);
        if (!out_b.empty()) write_to(out_b, f.B);
        json j{{"schema", "1"},
               {"verdict", "in"},
               {"A", matrix_rows(f.A)},
               {"B", matrix_rows(f.B)},
               {"witness", f.witness ? witness_json(*f.witness) : json(nullptr)}};
        ctx.out << j.dump(2) << '\n';
        return kExitOk;
    } catch (const RefusalError& e) {
        ctx.out << json{{"schema", "1"}, {"verdict", "out"}, {"message", e.what()}}.dump(2) << '\n';
        return kExitNegative;
    }
}

inline int run_boundary_cmd(const std::string& input, const std::string& backend, Context& ctx) {
    const auto l = load(input, backend.empty() ? "exact" : backend);
    if (l.backend == Backend::floating)
        throw DomainError("boundary: requires the exact or promote backend");
    const auto c = boundary::boundary_test(exact_of(l));
    ctx.out << classification_json(c).dump(2) << '\n';
    return c.status == boundary::Status::interior ? kExitOk : kExitNegative;
}

inline json pattern_json(const boundary::ZeroPattern& p) {
    json a = json::array(), b = json::array();
    for (const auto& [r, c] : p.a_zeros) a.push_back({r, c});
    for (const auto& [r, c] : p.b_zeros) b.push_back({r, c});
    return {{"kind", std::string(1, p.kind)}, {"a_zeros", a}, {"b_zeros", b}};
}

inline int run_patterns_cmd(std::size_t m, std::size_t n, bool list, const std::string& output, Context& ctx) {
    const auto c = boundary::component_count(m, n);
    json j{{"schema", "1"},
           {"m", m},
           {"n", n},
           {"zero_entry", c.zero_entry.get_str()},
           {"kind_a", c.kind_a.get_str()},
           {"kind_b", c.kind_b.get_str()},
           {"total", c.total.get_str()},
           {"stratum_dimension", c.stratum_dimension}};
    if (list || !output.empty()) {
        json ps = json::array();
        for (const auto& p : boundary::enumerate_zero_patterns(m, n)) ps.push_back(pattern_json(p));
        if (!output.empty()) {
            std::ofstream f(output);
            if (!f) throw ParseError(0, "cannot write '" + output + "'");
            f << ps.dump() << '\n';
        }
        if (list) j["patterns"] = ps;
    }
    ctx.out << j.dump(2) << '\n';
    return kExitOk;
}

inline json in_model_json(const RationalMatrix& P) {
    const auto d = rank3::nnrank3_membership(P);
    return rank3::to_string(d.verdict);
}

inline int run_family_uab(long a, long b, bool mle, const std::string& output, Context& ctx) {
    const auto U = families::uab_matrix(a, b);
    json j{{"schema", "1"}, {"family", "uab"}, {"a", a}, {"b", b}};
    const bool in = families::uab_in_model(a, b);
    j["in_model"] = in;
    RationalMatrix P = families::uab_rational(a, b) / Rational(8 * (a + b));
    P = canonical(P);
    j["membership"] = in_model_json(P);
    j["matrix"] = matrix_rows(families::uab_rational(a, b));
    if (!output.empty() && !mle) write_to(output, families::uab_rational(a, b));
    if (mle) {
        const auto res = families::uab_closed_form_mle(a, b);
        j["t"] = res.root.exact ? json(res.root.exact->get_str()) : json(res.root.value);
        j["t_value"] = res.root.value;
        const auto& q = res.params;
        j["parameters"] = {{"s", q.s}, {"t", q.t}, {"u", q.u}, {"v", q.v}, {"w", q.w}, {"r", q.r}};
        json ms = json::array();
        for (std::size_t k = 0; k < 8; ++k) {
            json e;
            if (res.exact_matrices) {
                const auto& M = (*res.exact_matrices)[k];
                e["matrix"] = matrix_rows(M);
                e["loglik"] = em::log_likelihood(U, to_real(M));
                e["boundary"] = boundary::to_string(boundary::boundary_test(M).status);
                if (!output.empty()) write_to(indexed_path(output, k + 1), M);
            } else {
                const auto& M = res.matrices[k];
                e["matrix"] = matrix_rows(M);
                e["loglik"] = em::log_likelihood(U, M);
                if (!output.empty()) write_to(indexed_path(output, k + 1), M);
            }
            const auto crit = em::is_critical(res.matrices[k], em::gradient_matrix(U, res.matrices[k]), U.u_plus());
            e["critical"] = crit.critical;
            ms.push_back(e);
        }
        j["mle"] = ms;
    }
    ctx.out << j.dump(2) << '\n';
    return kExitOk;
}

inline int run_family_rectangle(const std::string& as, const std::string& bs, const std::string& output,
                                Context& ctx) {
    const Rational a = parse_rational(as), b = parse_rational(bs);
    const auto P = families::rectangle_family(a, b);
    if (!output.empty()) write_to(output, P);
    const auto d = rank3::nnrank3_membership(P);
    json j{{"schema", "1"},
           {"family", "rectangle"},
           {"a", a.get_str()},
           {"b", b.get_str()},
           {"in_model", families::rectangle_in_model(a, b)},
           {"membership", rank3::to_string(d.verdict)},
           {"matrix", matrix_rows(P)}};
    ctx.out << j.dump(2) << '\n';
    return rank3::is_member(d.verdict) ? kExitOk : kExitNegative;
}

inline int run_family_green(const std::string& xs, const std::string& ys, bool endpoint,
                            const std::string& output, Context& ctx) {
    json j{{"schema", "1"}, {"family", "green"}};
    if (endpoint) {
        const auto [x, y] = families::greencurve_line_point(-0.967714);
        j["endpoint"] = {x, y};
        ctx.out << j.dump(2) << '\n';
        return kExitOk;
    }
    const Rational x = parse_rational(xs), y = parse_rational(ys);
    const auto P = families::greencurve_matrix(x, y);
    if (!output.empty()) write_to(output, P);
    j["x"] = x.get_str();
    j["y"] = y.get_str();
    j["det"] = determinant(P).get_str();
    j["rank"] = matrix_rank(P);
    j["matrix"] = matrix_rows(P);
    int code = kExitOk;
    if (matrix_rank(P) <= 3 && all_nonnegative(P)) {
        const auto d = rank3::nnrank3_membership(P);
        j["membership"] = rank3::to_string(d.verdict);
        code = rank3::is_member(d.verdict) ? kExitOk : kExitNegative;
    }
    ctx.out << j.dump(2) << '\n';
    return code;
}

struct ExperimentArgs {
    std::string kind;
    harness::ExperimentConfig cfg;
    std::size_t T = 10;
    std::string dist = "rational";
    long dist_n = 100;
    std::string csv;
    bool full_scale = false;
};

inline int run_experiment_cmd(ExperimentArgs a, Context& ctx) {
    auto& cfg = a.cfg;
    if (a.full_scale) {
        cfg.num_matrices = 2000;
        cfg.num_restarts = 2000;
        cfg.max_iter = 2000;
    }
    harness::ExperimentReport rep;
    if (a.kind == "table1") rep = harness::table1_experiment(cfg);
    else if (a.kind == "planted") rep = harness::planted_experiment(cfg, a.T);
    else {
        boundary::EntryDistribution d;
        if (a.dist == "rational") d = boundary::EntryDistribution::rational(a.dist_n);
        else if (a.dist == "unit") d = boundary::EntryDistribution::unit_interval(a.dist_n);
        else if (a.dist == "integer") d = boundary::EntryDistribution::small_integer(1, 4);
        else throw DomainError("unknown distribution '" + a.dist + "'");
        rep = harness::boundary_fraction_experiment(cfg, d);
    }
    if (!a.csv.empty()) {
        std::ofstream f(a.csv);
        if (!f) throw ParseError(0, "cannot write '" + a.csv + "'");
        f << rep.to_csv();
    }
    ctx.out << rep.to_json().dump(2) << '\n';
    return kExitOk;
}

} // namespace detail

inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
    detail::Context ctx{out, err};
    CLI::App app{"mixrank: EM, nonnegative rank 3 certification and boundary tests"};
    app.require_subcommand(1, 1);

    // em
    detail::EmArgs em_args;
    auto* em = app.add_subcommand("em", "fit a rank-r mixture by EM with restarts");
    em->add_option("--input,-i", em_args.input, "count table")->required()->check(CLI::ExistingFile);
    em->add_option("--output,-o", em_args.output, "write the estimate here");
    em->add_option("--r", em_args.r, "number of components")->capture_default_str();
    em->add_option("--restarts", em_args.restarts)->capture_default_str();
    em->add_option("--iterations", em_args.iterations)->capture_default_str();
    em->add_option("--seed", em_args.seed)->capture_default_str();
    em->add_option("--tol", em_args.tol)->capture_default_str();
    em->add_option("--crit-tol", em_args.crit_tol)->capture_default_str();
    em->add_option("--threads", em_args.threads, "0 = all cores");

    // nnrank3
    std::string input, backend, out_a, out_b, output;
    bool log = false;
    auto* nn = app.add_subcommand("nnrank3", "decide nonnegative rank <= 3");
    nn->add_option("--input,-i", input)->required()->check(CLI::ExistingFile);
    nn->add_option("--backend", backend, "exact|float|promote")->check(CLI::IsMember({"exact", "float", "promote"}));
    nn->add_flag("--log", log, "include the failure log");

    auto* fac = app.add_subcommand("factorize", "nonnegative rank-3 factorization");
    fac->add_option("--input,-i", input)->required()->check(CLI::ExistingFile);
    fac->add_option("--backend", backend, "exact|promote")->check(CLI::IsMember({"exact", "float", "promote"}));
    fac->add_option("--output-a", out_a);
    fac->add_option("--output-b", out_b);

    auto* bnd = app.add_subcommand("boundary", "interior / boundary classification");
    bnd->add_option("--input,-i", input)->required()->check(CLI::ExistingFile);
    bnd->add_option("--backend", backend, "exact|promote")->check(CLI::IsMember({"exact", "float", "promote"}));

    std::size_t pm = 4, pn = 4;
    bool list = false;
    auto* pat = app.add_subcommand("patterns", "algebraic boundary components and zero patterns");
    pat->add_option("--m", pm)->capture_default_str();
    pat->add_option("--n", pn)->capture_default_str();
    pat->add_flag("--list", list, "include every pattern in the JSON");
    pat->add_option("--output,-o", output, "write the pattern list as JSON");

    auto* fam = app.add_subcommand("family", "closed-form families");
    fam->require_subcommand(1, 1);
    long ua = 1, ub = 0;
    bool mle = false;
    auto* uab = fam->add_subcommand("uab", "U_{a,b}");
    uab->add_option("--a", ua)->required();
    uab->add_option("--b", ub)->required();
    uab->add_flag("--mle", mle, "closed-form maximum likelihood estimates");
    uab->add_option("--output,-o", output);
    std::string ra, rb;
    auto* rect = fam->add_subcommand("rectangle", "rectangle family P(a,b)");
    rect->add_option("--a", ra)->required();
    rect->add_option("--b", rb)->required();
    rect->add_option("--output,-o", output);
    std::string gx = "0", gy = "0";
    bool endpoint = false;
    auto* green = fam->add_subcommand("green", "two-parameter family P(x,y)");
    green->add_option("--x", gx)->capture_default_str();
    green->add_option("--y", gy)->capture_default_str();
    green->add_flag("--endpoint", endpoint, "curve point on the line x + 5y + 8 = 0");
    green->add_option("--output,-o", output);

    detail::ExperimentArgs ex;
    auto* exp = app.add_subcommand("experiment", "Monte-Carlo experiments");
    exp->add_option("kind", ex.kind, "table1|planted|boundary-fraction")
        ->required()
        ->check(CLI::IsMember({"table1", "planted", "boundary-fraction"}));
    exp->add_option("--m", ex.cfg.m)->capture_default_str();
    exp->add_option("--n", ex.cfg.n)->capture_default_str();
    exp->add_option("--r", ex.cfg.r)->capture_default_str();
    exp->add_option("--seed", ex.cfg.seed)->capture_default_str();
    exp->add_option("--matrices", ex.cfg.num_matrices)->capture_default_str();
    exp->add_option("--restarts", ex.cfg.num_restarts)->capture_default_str();
    exp->add_option("--iterations", ex.cfg.max_iter)->capture_default_str();
    exp->add_option("--polish", ex.cfg.polish_iter, "extra rounds for the best restart")->capture_default_str();
    exp->add_option("--tol", ex.cfg.tol)->capture_default_str();
    exp->add_option("--crit-tol", ex.cfg.crit_tol)->capture_default_str();
    exp->add_option("--T", ex.T, "planted sample size factor")->capture_default_str();
    exp->add_option("--dist", ex.dist, "rational|unit|integer")->capture_default_str();
    exp->add_option("--dist-n", ex.dist_n, "height bound for rational draws")->capture_default_str();
    exp->add_flag("--iid", ex.cfg.iid_uniform, "table1: iid uniform entries instead of the simplex");
    exp->add_option("--threads", ex.cfg.threads, "0 = all cores");
    exp->add_option("--csv", ex.csv, "per-trial CSV");
    exp->add_flag("--full-scale", ex.full_scale, "2000 matrices, 2000 restarts, 2000 iterations");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (*em) return detail::run_em_cmd(em_args, ctx);
        if (*nn) return detail::run_nnrank3_cmd(input, backend, log, ctx);
        if (*fac) return detail::run_factorize_cmd(input, backend, out_a, out_b, ctx);
        if (*bnd) return detail::run_boundary_cmd(input, backend, ctx);
        if (*pat) return detail::run_patterns_cmd(pm, pn, list, output, ctx);
        if (*uab) return detail::run_family_uab(ua, ub, mle, output, ctx);
        if (*rect) return detail::run_family_rectangle(ra, rb, output, ctx);
        if (*green) return detail::run_family_green(gx, gy, endpoint, output, ctx);
        if (*exp) return detail::run_experiment_cmd(ex, ctx);
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

} // namespace mixrank::cli
