#pragma once
#include <json.hpp>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "bounds.hpp"
#include "config.hpp"
#include "coupling.hpp"
#include "svg.hpp"

namespace mstein {

enum class Experiment { Simulate, Couple, Stein, Bound, Compare, Selftest };

inline const char* experiment_token(Experiment e) {
    switch (e) {
        case Experiment::Simulate: return "simulate";
        case Experiment::Couple: return "couple";
        case Experiment::Stein: return "stein";
        case Experiment::Bound: return "bound";
        case Experiment::Compare: return "compare";
        case Experiment::Selftest: return "selftest";
    }
    return "?";
}

inline Experiment experiment_from_token(const std::string& s) {
    if (s == "simulate") return Experiment::Simulate;
    if (s == "couple") return Experiment::Couple;
    if (s == "stein") return Experiment::Stein;
    if (s == "bound") return Experiment::Bound;
    if (s == "compare") return Experiment::Compare;
    if (s == "selftest") return Experiment::Selftest;
    throw ConfigError("config: unknown experiment '" + s +
                      "' (simulate, couple, stein, bound, compare, selftest)");
}

// One verdict of a run. `ref` names the guarantee the check exercises and is
// stable across versions; `name` is unique within a run.
struct CheckRow {
    std::string name;
    std::string ref;
    double value = 0.0;
    double bound = 0.0;
    bool pass = false;
};

// Everything a run produces. Artifact bytes are assembled here and written
// later by write_run, so no experiment code touches the filesystem.
struct RunResult {
    Experiment experiment = Experiment::Selftest;
    std::uint64_t seed = 0;
    std::vector<CheckRow> checks;
    std::vector<std::pair<std::string, std::string>> files;  // relative path -> bytes

    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

namespace detail {

inline std::string num17(double x) {
    char b[40];
    std::snprintf(b, sizeof b, "%.17g", x);
    return b;
}

inline std::string numg(double x) {
    char b[40];
    std::snprintf(b, sizeof b, "%g", x);
    return b;
}

inline ManifoldKind parse_manifold(const Config& cfg) {
    const std::string tok = cfg.get("manifold", "family");
    Family fam;
    try {
        fam = family_from_token(tok);
    } catch (const std::exception&) {
        throw ConfigError("config: [manifold] family '" + tok +
                          "' unknown (euclidean, sphere, hyperbolic, rotations, circle)");
    }
    int m;
    switch (fam) {
        case Family::Circle: m = static_cast<int>(cfg.integer_or("manifold", "m", 1)); break;
        case Family::Rotations: m = static_cast<int>(cfg.integer_or("manifold", "m", 3)); break;
        default: m = static_cast<int>(cfg.integer("manifold", "m")); break;
    }
    if (fam == Family::Circle && m != 1)
        throw ConfigError("config: [manifold] the circle has m = 1");
    if (fam == Family::Rotations && m != 3)
        throw ConfigError("config: [manifold] rotations support m = 3 only");
    if (m < 1) throw ConfigError("config: [manifold] m must be >= 1");
    return {fam, m};
}

inline Point parse_point_or(const Config& cfg, const std::string& sec, const std::string& key,
                            const ManifoldKind& kind, const Point& fallback) {
    if (!cfg.has(sec, key)) return fallback;
    const std::vector<double> v = cfg.numbers(sec, key);
    if (static_cast<int>(v.size()) != kind.ambient())
        throw ConfigError("config: [" + sec + "] " + key + " needs " +
                          std::to_string(kind.ambient()) + " coordinates");
    Vec x(kind.ambient());
    for (size_t i = 0; i < v.size(); ++i) x[static_cast<int>(i)] = v[i];
    if (kind.family == Family::Circle) x[0] = wrap_angle(x[0]);
    Point p{kind, x};
    try {
        check_point(p);
    } catch (const std::exception& e) {
        throw ConfigError("config: [" + sec + "] " + key + " rejected: " + e.what());
    }
    return p;
}

inline Potential parse_potential(const Config& cfg, const ManifoldKind& kind,
                                 const std::string& sec = "potential") {
    const std::string k = cfg.get(sec, "kind");
    const Point base = base_point(kind);
    try {
        if (k == "vmf") return make_vmf_sphere(parse_point_or(cfg, sec, "center", kind, base),
                                               cfg.num(sec, "c"));
        if (k == "sqdist")
            return make_sqdist_hyperbolic(parse_point_or(cfg, sec, "center", kind, base),
                                          cfg.num(sec, "c"));
        if (k == "vmf_rotations")
            return make_vmf_rotations(parse_point_or(cfg, sec, "center", kind, base),
                                      cfg.num(sec, "c"));
        if (k == "gaussian") {
            Vec mean = Vec::Zero(kind.ambient());
            if (cfg.has(sec, "mean")) mean = parse_point_or(cfg, sec, "mean", kind, base).x;
            Vec d = Vec::Ones(kind.ambient());
            if (cfg.has(sec, "a_diag")) {
                const auto v = cfg.numbers(sec, "a_diag");
                if (static_cast<int>(v.size()) != kind.ambient())
                    throw ConfigError("config: [" + sec + "] a_diag needs " +
                                      std::to_string(kind.ambient()) + " entries");
                for (size_t i = 0; i < v.size(); ++i) d[static_cast<int>(i)] = v[i];
            }
            return make_gaussian_euclidean(mean, Mat(d.asDiagonal()));
        }
        if (k == "von_mises")
            return make_von_mises_circle(cfg.num_or(sec, "mu", 0.0), cfg.num(sec, "c"));
        if (k == "fisher_watson") {
            const Point x1 = parse_point_or(cfg, sec, "x1", kind, base);
            Point x2_def = base;
            if (kind.family == Family::Sphere)
                x2_def = exp_map(base, {base, 0.5 * M_PI * orthonormal_frame(base).basis.col(0)});
            return make_fisher_watson(x1, parse_point_or(cfg, sec, "x2", kind, x2_def),
                                      cfg.num(sec, "c1"), cfg.num(sec, "c2"));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("config: [" + sec + "] rejected: " + std::string(e.what()));
    }
    throw ConfigError("config: [" + sec + "] kind '" + k +
                      "' unknown (vmf, sqdist, vmf_rotations, gaussian, von_mises, "
                      "fisher_watson)");
}

// User-supplied rate wins; otherwise the convexity certificate must produce one.
inline double resolve_kappa(const Config& cfg, const Potential& p,
                            const std::string& key = "kappa") {
    if (cfg.has("sde", key)) {
        const double v = cfg.num("sde", key);
        if (!(v > 0)) throw ConfigError("config: [sde] " + key + " must be > 0");
        return v;
    }
    const A1Certificate cert = a1_certificate(p);
    if (cert.kappa) return *cert.kappa;
    throw ConfigError("config: [sde] " + key + " required; " + cert.note);
}

inline SdeConfig parse_sde(const Config& cfg, std::uint64_t seed, bool need_horizon) {
    SdeConfig s;
    s.step_h = cfg.num_or("sde", "h", 0.005);
    s.horizon_T = cfg.num_or("sde", "T", 0.0);
    s.burn_in = cfg.num_or("sde", "burn_in", 0.0);
    s.seed = seed;
    if (need_horizon) {
        try {
            check_sde_config(s);
        } catch (const std::exception& e) {
            throw ConfigError("config: [sde] rejected: " + std::string(e.what()));
        }
    } else if (!(s.step_h > 0) || s.step_h > 0.05) {
        throw ConfigError("config: [sde] h must be in (0, 0.05]");
    }
    return s;
}

inline void apply_check_filter(const Config& cfg, std::vector<CheckRow>& rows) {
    if (!cfg.has("run", "checks")) return;
    std::set<std::string> want;
    std::istringstream in(cfg.get("run", "checks"));
    std::string tok;
    while (std::getline(in, tok, ',')) {
        tok = strip(tok);
        if (!tok.empty()) want.insert(tok);
    }
    if (want.empty()) throw ConfigError("config: [run] checks names no check");
    for (const auto& w : want) {
        bool known = false;
        for (const auto& r : rows) known = known || r.name == w;
        if (!known) {
            std::string have;
            for (const auto& r : rows) have += (have.empty() ? "" : ", ") + r.name;
            throw ConfigError("config: [run] checks: unknown check '" + w + "' (have: " + have +
                              ")");
        }
    }
    std::vector<CheckRow> kept;
    for (auto& r : rows)
        if (want.count(r.name)) kept.push_back(std::move(r));
    rows = std::move(kept);
}

inline MeanStderr mean_se(const std::vector<double>& v) {
    MeanStderr r;
    for (double t : v) r.mean += t;
    r.mean /= static_cast<double>(v.size());
    if (v.size() < 2) {
        r.se = std::numeric_limits<double>::infinity();
        return r;
    }
    double s2 = 0.0;
    for (double t : v) s2 += (t - r.mean) * (t - r.mean);
    r.se = std::sqrt(s2 / (static_cast<double>(v.size()) - 1.0) /
                     static_cast<double>(v.size()));
    return r;
}

// ---------------------------------------------------------------------------
// Experiments. Each appends checks and artifact bytes to the result.

inline void run_couple(const Config& cfg, std::uint64_t seed, RunResult& out) {
    const ManifoldKind kind = parse_manifold(cfg);
    const Potential pot = parse_potential(cfg, kind);
    const double kappa = resolve_kappa(cfg, pot);
    const SdeConfig sde = parse_sde(cfg, seed, true);
    const long long runs = cfg.integer_or("couple", "runs", 100);
    if (runs < 2) throw ConfigError("config: [couple] runs must be >= 2");
    const double d0 = cfg.num_or("couple", "d0", 1.0);
    if (!(d0 > 0)) throw ConfigError("config: [couple] d0 must be > 0");

    const Point x0 = parse_point_or(cfg, "couple", "x0", kind, base_point(kind));
    Point y0 = x0;
    if (cfg.has("couple", "y0")) {
        y0 = parse_point_or(cfg, "couple", "y0", kind, x0);
    } else {
        y0 = exp_map(x0, {x0, d0 * orthonormal_frame(x0).basis.col(0)});
    }
    const double sep0 = distance(x0, y0);
    if (!(sep0 > 0)) throw ConfigError("config: [couple] start points coincide");

    CouplingConfig cc;
    try {
        cc = make_coupling_config(kind, sde);
    } catch (const std::exception& e) {
        throw ConfigError("config: coupling setup rejected: " + std::string(e.what()));
    }

    std::vector<CoupledRun> trajs(static_cast<size_t>(runs));
    parallel_for(runs, [&](std::int64_t i) {
        RngStream rng = RngStream(seed).substream(static_cast<std::uint64_t>(i));
        trajs[static_cast<size_t>(i)] = run_coupled(x0, y0, pot, cc, rng);
    });

    const size_t n_rows = trajs.front().times.size();
    const double grid = cfg.num_or("couple", "grid", 0.0);
    size_t stride;
    if (grid > 0)
        stride = static_cast<size_t>(std::max<long long>(1, std::llround(grid / sde.step_h)));
    else
        stride = std::max<size_t>(1, (n_rows - 1) / 40);
    std::vector<size_t> picks;
    for (size_t j = 0; j < n_rows; j += stride) picks.push_back(j);
    if (picks.back() != n_rows - 1) picks.push_back(n_rows - 1);

    std::string csv = "t,mean_dist,stderr,mode_fraction\n";
    std::vector<double> ts, means, ses, fracs;
    for (size_t j : picks) {
        std::vector<double> d(trajs.size());
        double indep = 0.0;
        for (size_t i = 0; i < trajs.size(); ++i) {
            d[i] = trajs[i].dists[j];
            if (trajs[i].modes[j] == CoupleMode::Independent) indep += 1.0;
        }
        const MeanStderr ms = mean_se(d);
        ts.push_back(trajs.front().times[j]);
        means.push_back(ms.mean);
        ses.push_back(ms.se);
        fracs.push_back(indep / static_cast<double>(trajs.size()));
        csv += num17(ts.back()) + "," + num17(ms.mean) + "," + num17(ms.se) + "," +
               num17(fracs.back()) + "\n";
    }

    SvgPlot plot;
    plot.title = "coupled distance decay";
    plot.xlabel = "t";
    plot.ylabel = "log10 mean distance";
    std::vector<double> lm(means.size()), lr(means.size());
    for (size_t i = 0; i < means.size(); ++i) {
        lm[i] = std::log10(std::max(means[i], 1e-16));
        lr[i] = std::log10(std::max(sep0 * std::exp(-kappa * ts[i]), 1e-16));
    }
    plot.add(ts, lm, "#1f77b4", "measured");
    plot.add(ts, lr, "#d62728", "rate " + numg(kappa), true);

    const double t_end = ts.back();
    const double ref_end = sep0 * std::exp(-kappa * t_end) + 3.0 * ses.back();
    out.checks.push_back(
        {"mean_decay", "contraction-rate", means.back(), ref_end, means.back() <= ref_end});
    double bad = 0.0;
    for (const auto& tr : trajs) {
        try {
            check_point(tr.final_state.x);
            check_point(tr.final_state.y);
        } catch (const std::exception&) {
            bad += 1.0;
        }
    }
    out.checks.push_back({"on_manifold", "state-validity", bad, 0.0, bad == 0.0});

    out.files.emplace_back("decay.csv", std::move(csv));
    out.files.emplace_back("plots/decay.svg", plot.render());
}

inline void run_simulate(const Config& cfg, std::uint64_t seed, RunResult& out) {
    const ManifoldKind kind = parse_manifold(cfg);
    const Potential pot = parse_potential(cfg, kind);
    const double kappa = resolve_kappa(cfg, pot);
    const SdeConfig sde = parse_sde(cfg, seed, false);
    const long long n = cfg.integer_or("simulate", "n", 256);
    if (n < 2 || n > 100000) throw ConfigError("config: [simulate] n must be in [2, 100000]");

    const auto reg = test_function_registry(kind);
    const std::string fname = cfg.get_or("simulate", "fn", reg.front().name);
    TestFunction tf;
    try {
        tf = registry_function(kind, fname);
    } catch (const std::exception& e) {
        throw ConfigError("config: [simulate] fn rejected: " + std::string(e.what()));
    }

    const SampleSet s = sample_diffusion(pot, static_cast<int>(n), kappa, sde);
    const double eps = cfg.num_or("simulate", "fd_eps", 1e-3);
    if (!(eps > 0)) throw ConfigError("config: [simulate] fd_eps must be > 0");
    std::vector<double> gen(s.points.size());
    parallel_for(static_cast<std::int64_t>(s.points.size()), [&](std::int64_t i) {
        gen[static_cast<size_t>(i)] = fd_generator(tf.h, pot, s.points[static_cast<size_t>(i)],
                                                   eps);
    });
    const MeanStderr ms = mean_se(gen);
    out.checks.push_back({"ergodic_identity", "generator-mean-zero", std::abs(ms.mean),
                          3.0 * ms.se + 0.01, std::abs(ms.mean) <= 3.0 * ms.se + 0.01});
    out.checks.push_back({"sample_count", "chain-thinning",
                          static_cast<double>(s.points.size()), static_cast<double>(n),
                          static_cast<long long>(s.points.size()) == n});
    out.files.emplace_back("samples.csv", samples_csv_text(s));
}

inline double circle_row_residual(const CircleSolution& sol, const TestFunction& h,
                                  const Potential& p, double x) {
    const int G = static_cast<int>(sol.g.size()) - 1;
    long long j = std::llround((wrap_angle(x) + M_PI) / sol.dx) % G;
    if (j < 0) j += G;
    auto fetch = [&](long long k) {
        k %= G;
        if (k < 0) k += G;
        return sol.g[static_cast<size_t>(k)];
    };
    const double gp =
        (fetch(j - 2) - 8.0 * fetch(j - 1) + 8.0 * fetch(j + 1) - fetch(j + 2)) / (12.0 * sol.dx);
    Vec v(1);
    v[0] = wrap_angle(sol.xs[static_cast<size_t>(j)]);
    const Point pt{ManifoldKind::circle(), v};
    const double dphi = grad_phi(p, pt).comps[0];
    return std::abs(gp - dphi * sol.g[static_cast<size_t>(j)] - (h.h(pt) - sol.mean_h));
}

inline void run_stein(const Config& cfg, std::uint64_t seed, RunResult& out) {
    const ManifoldKind kind = parse_manifold(cfg);
    const Potential pot = parse_potential(cfg, kind);
    const SdeConfig sde = parse_sde(cfg, seed, false);
    const long long points = cfg.integer_or("stein", "points", 8);
    if (points < 1 || points > 512)
        throw ConfigError("config: [stein] points must be in [1, 512]");

    const auto reg = test_function_registry(kind);
    const std::string def = kind.family == Family::Circle ? "cos" : reg.front().name;
    TestFunction tf;
    try {
        tf = registry_function(kind, cfg.get_or("stein", "fn", def));
    } catch (const std::exception& e) {
        throw ConfigError("config: [stein] fn rejected: " + std::string(e.what()));
    }

    std::string csv = "x,f_h,stderr,residual\n";
    SvgPlot plot;
    plot.xlabel = "x";
    plot.ylabel = "f_h";

    if (kind.family == Family::Circle) {
        const long long grid = cfg.integer_or("stein", "grid", 4096);
        CircleSolution sol;
        try {
            sol = circle_solve(tf, pot, static_cast<int>(grid));
        } catch (const std::exception& e) {
            throw ConfigError("config: [stein] rejected: " + std::string(e.what()));
        }
        std::vector<double> xs, fs;
        for (long long j = 0; j < points; ++j) {
            const double x = -M_PI + (2.0 * j + 1.0) * M_PI / static_cast<double>(points);
            const double f = sol.antiderivative(x);
            csv += num17(x) + "," + num17(f) + ",0," +
                   num17(circle_row_residual(sol, tf, pot, x)) + "\n";
            xs.push_back(x);
            fs.push_back(f);
        }
        plot.title = "stein solution (quadrature)";
        std::vector<double> gx, gf;
        for (size_t j = 0; j < sol.xs.size(); ++j) {
            gx.push_back(sol.xs[j]);
            gf.push_back(sol.antiderivative(sol.xs[j]));
        }
        plot.add(gx, gf, "#1f77b4", "f_h");
        const double res = circle_ode_residual(sol, tf, pot);
        const double tol = cfg.num_or("stein", "tol_residual", 1e-8);
        out.checks.push_back({"ode_residual", "stein-equation-residual", res, tol, res <= tol});
    } else {
        const double kappa = resolve_kappa(cfg, pot);
        SteinConfig sc;
        sc.step_h = sde.step_h;
        sc.seed = seed;
        sc.n_paths = static_cast<int>(cfg.integer_or("stein", "n_paths", 200));
        sc.horizon_T = cfg.num_or("stein", "T", 0.0);
        sc.chain_T = cfg.num_or("stein", "chain_T", 0.0);
        sc.burn_in = cfg.num_or("stein", "burn_in", 0.0);
        std::optional<SteinSolver> solver;
        try {
            solver.emplace(pot, kappa, sc);
        } catch (const std::exception& e) {
            throw ConfigError("config: [stein] rejected: " + std::string(e.what()));
        }
        RngStream pr = RngStream(seed).substream(77);
        std::vector<std::pair<double, double>> curve;
        double trunc_max = 0.0;
        for (long long j = 0; j < points; ++j) {
            const Point x = random_probe_point(kind, pr);
            const SteinEstimate est = solver->solve_fh(x, tf);
            csv += num17(x.x[0]) + "," + num17(est.value) + "," + num17(est.se) + "," +
                   num17(est.truncation_bound) + "\n";
            curve.emplace_back(x.x[0], est.value);
            trunc_max = std::max(trunc_max, est.truncation_bound);
        }
        std::sort(curve.begin(), curve.end());
        std::vector<double> xs, fs;
        for (const auto& q : curve) {
            xs.push_back(q.first);
            fs.push_back(q.second);
        }
        plot.title = "stein solution (monte carlo)";
        plot.add(xs, fs, "#1f77b4", "f_h");
        const double tol = cfg.num_or("stein", "tol_truncation", 1e-2);
        out.checks.push_back(
            {"truncation", "horizon-truncation", trunc_max, tol, trunc_max <= tol});
        out.checks.push_back({"horizon", "mixing-window", solver->horizon(), 3.0 / kappa,
                              solver->horizon() >= 3.0 / kappa});
    }
    out.files.emplace_back("stein.csv", std::move(csv));
    out.files.emplace_back("plots/stein.svg", plot.render());
}

inline SampleSet sample_target(const Potential& p, int n, double kappa, const SdeConfig& base,
                               const RngStream& sub) {
    try {
        RngStream r = sub;
        return sample_exact(p, n, r);
    } catch (const std::invalid_argument&) {
        SdeConfig c = base;
        c.seed = sub.seed();
        return sample_diffusion(p, n, kappa, c);
    }
}

inline void run_bound(const Config& cfg, std::uint64_t seed, RunResult& out) {
    const std::string form = cfg.get("bound", "form");
    const long long w1_n = cfg.integer_or("bound", "w1_n", 256);
    if (w1_n < 2 || w1_n > 2048)
        throw ConfigError("config: [bound] w1_n must be in [2, 2048]");
    RngStream root(seed);
    nlohmann::json records = nlohmann::json::array();

    if (form == "uniform_rotations") {
        const double c = cfg.num("bound", "c");
        if (!(c > 0)) throw ConfigError("config: [bound] c must be > 0");
        const Potential pot = make_vmf_rotations(base_point(ManifoldKind::rotations()), c);
        const double kappa = resolve_kappa(cfg, pot);
        const SdeConfig sde = parse_sde(cfg, seed, false);
        const long long n = cfg.integer_or("bound", "n", 100000);
        if (n < 2) throw ConfigError("config: [bound] n must be >= 2");

        RngStream r1 = root.substream(1);
        const SampleSet haar = sample_haar_rotations(static_cast<int>(n), r1);
        std::vector<double> vals(haar.points.size());
        for (size_t i = 0; i < haar.points.size(); ++i) {
            const Mat3 z = as_mat3(haar.points[i].x);
            vals[i] = std::sqrt(std::max(0.0, 3.0 - (z * z).trace()));
        }
        const MeanStderr ms = mean_se(vals);
        const double scale = c / (2.0 * kappa);
        const double bound = scale * ms.mean;
        const double se_b = scale * ms.se;

        RngStream r2 = root.substream(2);
        const SampleSet ha = sample_haar_rotations(static_cast<int>(w1_n), r2);
        SdeConfig dc = sde;
        dc.seed = root.substream(3).seed();
        const SampleSet db = sample_diffusion(pot, static_cast<int>(w1_n), kappa, dc);
        const double w1 = w1_empirical(ha, db).value;

        const double four_over_pi = 4.0 / M_PI;
        out.checks.push_back({"haar_mean", "uniform-trace-moment", ms.mean, four_over_pi,
                              std::abs(ms.mean - four_over_pi) <= 3.0 * ms.se});
        const bool dom = w1 <= bound + 3.0 * se_b;
        out.checks.push_back(
            {"bound_dominates", "wasserstein-domination", w1, bound + 3.0 * se_b, dom});
        records.push_back({{"bound", bound},
                           {"empirical", w1},
                           {"stderr", se_b},
                           {"inputs", "form=uniform_rotations c=" + numg(c) +
                                          " kappa=" + numg(kappa) + " n=" + numg(double(n)) +
                                          " w1_n=" + numg(double(w1_n))},
                           {"pass", dom}});
    } else if (form == "two_fisher") {
        const ManifoldKind kind = parse_manifold(cfg);
        if (kind.family != Family::Sphere)
            throw ConfigError("config: [bound] two_fisher needs a sphere manifold");
        const double c1 = cfg.num("bound", "c1");
        const double c2 = cfg.num("bound", "c2");
        const Point base = base_point(kind);
        const Point x1 = parse_point_or(cfg, "bound", "x1", kind, base);
        const Point x2_def =
            exp_map(base, {base, 0.5 * M_PI * orthonormal_frame(base).basis.col(0)});
        const Point x2 = parse_point_or(cfg, "bound", "x2", kind, x2_def);
        Potential p1{}, p2{};
        try {
            p1 = make_vmf_sphere(x1, c1);
            p2 = make_vmf_sphere(x2, c2);
        } catch (const std::exception& e) {
            throw ConfigError("config: [bound] rejected: " + std::string(e.what()));
        }
        double kappa;
        if (cfg.has("sde", "kappa")) {
            kappa = resolve_kappa(cfg, p1);
        } else {
            const auto k1 = a1_certificate(p1).kappa;
            const auto k2 = a1_certificate(p2).kappa;
            if (!k1 || !k2)
                throw ConfigError("config: [sde] kappa required; no certificate for c1=" +
                                  numg(c1) + ", c2=" + numg(c2));
            kappa = std::min(*k1, *k2);
        }
        const long long n = cfg.integer_or("bound", "n", 2000);
        if (n < 2) throw ConfigError("config: [bound] n must be >= 2");

        auto mean_rho = [&](const Potential& p, const Point& pole, std::uint64_t sub,
                            double& se) {
            RngStream r = root.substream(sub);
            SampleSet s;
            try {
                s = sample_exact(p, static_cast<int>(n), r);
            } catch (const std::exception& e) {
                throw ConfigError("config: [bound] rejected: " + std::string(e.what()));
            }
            std::vector<double> d(s.points.size());
            for (size_t i = 0; i < s.points.size(); ++i) d[i] = distance(pole, s.points[i]);
            const MeanStderr ms = mean_se(d);
            se = ms.se;
            return ms.mean;
        };
        double se1 = 0, se2 = 0;
        const double mr1 = mean_rho(p1, x1, 1, se1);
        const double mr2 = mean_rho(p2, x2, 2, se2);
        const double bound = vmf_vmf_bound(x1, c1, x2, c2, kappa, mr1, mr2);
        const double cstar = (c2 * x2.x - c1 * x1.x).norm();
        const double se_b = cstar / (4.0 * kappa) * std::sqrt(se1 * se1 + se2 * se2);

        RngStream r3 = root.substream(3), r4 = root.substream(4);
        const double w1 = w1_empirical(sample_exact(p1, static_cast<int>(w1_n), r3),
                                       sample_exact(p2, static_cast<int>(w1_n), r4))
                              .value;
        const bool dom = w1 <= bound + 3.0 * se_b;
        out.checks.push_back(
            {"bound_dominates", "wasserstein-domination", w1, bound + 3.0 * se_b, dom});
        records.push_back({{"bound", bound},
                           {"empirical", w1},
                           {"stderr", se_b},
                           {"inputs", "form=two_fisher c1=" + numg(c1) + " c2=" + numg(c2) +
                                          " kappa=" + numg(kappa) + " n=" + numg(double(n)) +
                                          " w1_n=" + numg(double(w1_n))},
                           {"pass", dom}});
    } else if (form == "watson_tilt") {
        const ManifoldKind kind = parse_manifold(cfg);
        if (kind.family != Family::Sphere)
            throw ConfigError("config: [bound] watson_tilt needs a sphere manifold");
        const double c1 = cfg.num("bound", "c1");
        const double c2 = cfg.num("bound", "c2");
        const Point base = base_point(kind);
        const Point x1 = parse_point_or(cfg, "bound", "x1", kind, base);
        const Point x2_def =
            exp_map(base, {base, 0.5 * M_PI * orthonormal_frame(base).basis.col(0)});
        const Point x2 = parse_point_or(cfg, "bound", "x2", kind, x2_def);
        Potential tilted{};
        try {
            tilted = make_fisher_watson(x1, x2, c1, c2);
        } catch (const std::exception& e) {
            throw ConfigError("config: [bound] rejected: " + std::string(e.what()));
        }
        const double kappa = resolve_kappa(cfg, tilted);
        const SdeConfig sde = parse_sde(cfg, seed, false);
        const long long n = cfg.integer_or("bound", "n", 256);
        if (n < 2 || n > 2048) throw ConfigError("config: [bound] n must be in [2, 2048]");

        SdeConfig dc = sde;
        dc.seed = root.substream(1).seed();
        const SampleSet z = sample_diffusion(tilted, static_cast<int>(n), kappa, dc);
        const double bound = fisher_watson_bound(x2, c2, kappa, z);
        std::vector<double> vals(z.points.size());
        for (size_t i = 0; i < z.points.size(); ++i)
            vals[i] = std::abs(std::sin(2.0 * distance(x2, z.points[i])));
        const double se_b = c2 / (2.0 * kappa) * mean_se(vals).se;

        RngStream r2 = root.substream(2);
        const double w1 =
            w1_empirical(z, sample_exact(make_vmf_sphere(x1, c1), static_cast<int>(n), r2))
                .value;
        const bool dom = w1 <= bound + 3.0 * se_b;
        out.checks.push_back(
            {"bound_dominates", "wasserstein-domination", w1, bound + 3.0 * se_b, dom});
        records.push_back({{"bound", bound},
                           {"empirical", w1},
                           {"stderr", se_b},
                           {"inputs", "form=watson_tilt c1=" + numg(c1) + " c2=" + numg(c2) +
                                          " kappa=" + numg(kappa) + " n=" + numg(double(n))},
                           {"pass", dom}});
    } else if (form == "gradient") {
        const ManifoldKind kind = parse_manifold(cfg);
        const Potential phi = parse_potential(cfg, kind, "potential");
        const Potential psi = parse_potential(cfg, kind, "potential_b");
        const double kphi = resolve_kappa(cfg, phi, "kappa");
        const double kpsi = resolve_kappa(cfg, psi, "kappa_b");
        const SdeConfig sde = parse_sde(cfg, seed, false);
        const long long n = cfg.integer_or("bound", "n", 4096);
        if (n < 2) throw ConfigError("config: [bound] n must be >= 2");

        const SampleSet z =
            sample_target(psi, static_cast<int>(n), kpsi, sde, root.substream(1));
        const double bound = wasserstein_bound_mixed(phi, psi, z, kphi, kpsi);
        const double a = 1.0 / (2.0 * kphi), b = 1.0 / (2.0 * kpsi);
        std::vector<double> vals(z.points.size());
        for (size_t i = 0; i < z.points.size(); ++i) {
            const Point& q = z.points[i];
            vals[i] = tangent_norm(
                {q, a * grad_phi(psi, q).comps - b * grad_phi(phi, q).comps});
        }
        const double se_b = mean_se(vals).se;

        const SampleSet sa =
            sample_target(phi, static_cast<int>(w1_n), kphi, sde, root.substream(2));
        const SampleSet sb =
            sample_target(psi, static_cast<int>(w1_n), kpsi, sde, root.substream(3));
        const double w1 = w1_empirical(sa, sb).value;
        const bool dom = w1 <= bound + 3.0 * se_b;
        out.checks.push_back(
            {"bound_dominates", "wasserstein-domination", w1, bound + 3.0 * se_b, dom});
        records.push_back({{"bound", bound},
                           {"empirical", w1},
                           {"stderr", se_b},
                           {"inputs", "form=gradient kappa=" + numg(kphi) +
                                          " kappa_b=" + numg(kpsi) + " n=" + numg(double(n)) +
                                          " w1_n=" + numg(double(w1_n))},
                           {"pass", dom}});
    } else {
        throw ConfigError("config: [bound] form '" + form +
                          "' unknown (uniform_rotations, two_fisher, watson_tilt, gradient)");
    }
    out.files.emplace_back("bounds.json", records.dump(2) + "\n");
}

inline void run_compare(const Config& cfg, std::uint64_t seed, RunResult& out) {
    const ManifoldKind kind = parse_manifold(cfg);
    const Potential pot = parse_potential(cfg, kind);
    const double kappa = resolve_kappa(cfg, pot);
    const SdeConfig sde = parse_sde(cfg, seed, false);
    const long long n = cfg.integer_or("compare", "n", 256);
    if (n < 2 || n > 2048) throw ConfigError("config: [compare] n must be in [2, 2048]");
    const double max_w1 = cfg.num("compare", "max_w1");
    if (!(max_w1 > 0)) throw ConfigError("config: [compare] max_w1 must be > 0");

    RngStream r1 = RngStream(seed).substream(1);
    SampleSet a;
    try {
        a = sample_exact(pot, static_cast<int>(n), r1);
    } catch (const std::exception& e) {
        throw ConfigError("config: [compare] rejected: " + std::string(e.what()));
    }
    SdeConfig dc = sde;
    dc.seed = RngStream(seed).substream(2).seed();
    const SampleSet b = sample_diffusion(pot, static_cast<int>(n), kappa, dc);
    const double w1 = w1_empirical(a, b).value;
    out.checks.push_back({"w1_close", "sampler-agreement", w1, max_w1, w1 <= max_w1});
    out.files.emplace_back("samples_exact.csv", samples_csv_text(a));
    out.files.emplace_back("samples_diffusion.csv", samples_csv_text(b));
}

}  // namespace detail

// Quick deterministic cross-module checks; the whole battery stays well under
// the one-minute budget.
inline std::vector<CheckRow> selftest_checks() {
    std::vector<CheckRow> out;
    auto push = [&](const char* name, const char* ref, double v, double b, bool pass) {
        out.push_back({name, ref, v, b, pass});
    };

    {
        double worst = 0.0;
        const ManifoldKind kinds[] = {ManifoldKind::euclidean(2), ManifoldKind::sphere(2),
                                      ManifoldKind::hyperbolic(2), ManifoldKind::rotations(),
                                      ManifoldKind::circle()};
        RngStream rng(101);
        for (const auto& k : kinds)
            for (int i = 0; i < 40; ++i) {
                const Point x = random_probe_point(k, rng);
                const Point y = random_probe_point(k, rng);
                try {
                    const TangentVector v = log_map(x, y);
                    worst = std::max(worst, distance(exp_map(x, v), y));
                } catch (const CutLocusError&) {
                }
            }
        // Floor is set by distance() near zero separation: acosh(1 + d) and
        // acos(1 - d) turn coordinate-level noise into sqrt(noise) ~ 1e-7.
        push("geodesic_roundtrip", "exp-log-inverse", worst, 1e-6, worst <= 1e-6);
    }
    {
        RngStream rng(102);
        const ManifoldKind k = ManifoldKind::circle();
        SampleSet a{k, {}, Provenance::External}, b = a;
        for (int i = 0; i < 6; ++i) {
            Vec va(1), vb(1);
            va[0] = wrap_angle(rng.uniform() * 2.0 * M_PI);
            vb[0] = wrap_angle(rng.uniform() * 2.0 * M_PI);
            a.points.push_back({k, va});
            b.points.push_back({k, vb});
        }
        const double jv = w1_empirical(a, b).value;
        std::vector<int> perm{0, 1, 2, 3, 4, 5};
        double best = std::numeric_limits<double>::infinity();
        do {
            double c = 0.0;
            for (int i = 0; i < 6; ++i) c += distance(a.points[i], b.points[perm[i]]);
            best = std::min(best, c / 6.0);
        } while (std::next_permutation(perm.begin(), perm.end()));
        const double gap = std::abs(jv - best);
        push("matching_exact", "assignment-optimality", gap, 1e-12, gap <= 1e-12);
    }
    {
        const BoundConstants bc = make_bound_constants(2, 1.0, 0.1, 0.5, 0.5, 0.5);
        const FhConstants fc = fh_constant_bounds(1.0, 1.0, 1.0, bc);
        const double d2 = std::abs(*fc.C2f - 3.1168525251892829);
        push("second_roof", "constants-regression", d2, 1e-12, d2 <= 1e-12);
        const double de = std::abs(eta_star(bc) - 5.558426262594641);
        push("eta_star", "constants-regression", de, 1e-12, de <= 1e-12);
    }
    {
        const Potential vm = make_von_mises_circle(0.0, 1.0);
        const TestFunction hcos = registry_function(ManifoldKind::circle(), "cos");
        const CircleSolution sol = circle_solve(hcos, vm, 4096);
        const double res = circle_ode_residual(sol, hcos, vm);
        push("circle_stein", "stein-equation-residual", res, 1e-8, res <= 1e-8);
    }
    {
        RngStream rng(103);
        const SampleSet haar = sample_haar_rotations(20000, rng);
        std::vector<double> vals(haar.points.size());
        for (size_t i = 0; i < vals.size(); ++i) {
            const detail::Mat3 z = detail::as_mat3(haar.points[i].x);
            vals[i] = std::sqrt(std::max(0.0, 3.0 - (z * z).trace()));
        }
        const MeanStderr ms = detail::mean_se(vals);
        const double gap = std::abs(ms.mean - 4.0 / M_PI);
        push("haar_moment", "uniform-trace-moment", ms.mean, 4.0 / M_PI, gap <= 3.0 * ms.se);
    }
    {
        const ManifoldKind k = ManifoldKind::euclidean(2);
        const Potential g = make_gaussian_euclidean(Vec::Zero(2), Mat::Identity(2, 2));
        SdeConfig sde;
        sde.step_h = 1e-3;
        sde.horizon_T = 1.0;
        sde.seed = 104;
        const CouplingConfig cc = make_coupling_config(k, sde);
        const Point x0 = detail::base_point(k);
        const Point y0 = exp_map(x0, {x0, orthonormal_frame(x0).basis.col(0)});
        const CoupledRun run = run_coupled(x0, y0, g, cc);
        double worst = 0.0;
        for (size_t i = 0; i < run.times.size(); ++i) {
            const double ref = std::exp(-0.5 * run.times[i]);
            worst = std::max(worst, std::abs(run.dists[i] / ref - 1.0));
        }
        push("linear_rate", "linear-rate-exact", worst, 10.0 * sde.step_h,
             worst <= 10.0 * sde.step_h);
    }
    {
        RngStream rng(105);
        const Potential p = make_vmf_sphere(detail::base_point(ManifoldKind::sphere(2)), 0.7);
        SampleSet s = sample_exact(p, 20, rng);
        const auto path = std::filesystem::temp_directory_path() /
                          ("mstein_selftest_" + std::to_string(::getpid()) + ".csv");
        double bad = 1.0;
        try {
            save_samples_csv(s, path.string());
            const SampleSet back = load_samples_csv(path.string());
            bad = 0.0;
            if (back.points.size() != s.points.size()) bad = 1.0;
            for (size_t i = 0; i < s.points.size() && bad == 0.0; ++i)
                if ((back.points[i].x - s.points[i].x).cwiseAbs().maxCoeff() != 0.0) bad = 1.0;
        } catch (const std::exception&) {
            bad = 1.0;
        }
        std::error_code ec;
        std::filesystem::remove(path, ec);
        push("csv_roundtrip", "io-roundtrip", bad, 0.0, bad == 0.0);
    }
    return out;
}

inline RunResult run_experiment(const Config& cfg,
                                std::optional<std::uint64_t> seed_override = {}) {
    RunResult r;
    r.experiment = experiment_from_token(cfg.get("run", "experiment"));
    r.seed = seed_override ? *seed_override : cfg.uint("run", "seed");
    switch (r.experiment) {
        case Experiment::Couple: detail::run_couple(cfg, r.seed, r); break;
        case Experiment::Simulate: detail::run_simulate(cfg, r.seed, r); break;
        case Experiment::Stein: detail::run_stein(cfg, r.seed, r); break;
        case Experiment::Bound: detail::run_bound(cfg, r.seed, r); break;
        case Experiment::Compare: detail::run_compare(cfg, r.seed, r); break;
        case Experiment::Selftest: r.checks = selftest_checks(); break;
    }
    detail::apply_check_filter(cfg, r.checks);

    std::string summary = "name,ref,value,bound,status\n";
    for (const auto& c : r.checks)
        summary += c.name + "," + c.ref + "," + detail::num17(c.value) + "," +
                   detail::num17(c.bound) + "," + (c.pass ? "pass" : "fail") + "\n";
    r.files.emplace_back("summary.csv", std::move(summary));

    nlohmann::json manifest;
    manifest["experiment"] = experiment_token(r.experiment);
    manifest["seed"] = r.seed;
    manifest["checks"] = r.checks.size();
    auto arts = nlohmann::json::array();
    for (const auto& f : r.files) arts.push_back(f.first);
    manifest["artifacts"] = arts;
    r.files.emplace_back("manifest.json", manifest.dump(2) + "\n");
    return r;
}

// The only function that writes run artifacts; experiments assemble bytes in
// memory, so every file goes through this one serial loop.
inline void write_run(const RunResult& r, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("run: cannot create " + out_dir + ": " + ec.message());
    for (const auto& [rel, bytes] : r.files) {
        const fs::path p = fs::path(out_dir) / rel;
        if (p.has_parent_path()) {
            fs::create_directories(p.parent_path(), ec);
            if (ec)
                throw std::runtime_error("run: cannot create " + p.parent_path().string() +
                                         ": " + ec.message());
        }
        std::ofstream out(p, std::ios::binary);
        if (!out) throw std::runtime_error("run: cannot open " + p.string());
        out << bytes;
        if (!out) throw std::runtime_error("run: write failed for " + p.string());
    }
}

struct Report {
    Experiment experiment = Experiment::Selftest;
    std::uint64_t seed = 0;
    std::vector<CheckRow> rows;
};

// Reads a run directory back; any missing or malformed artifact raises
// ConfigError, which the driver maps to exit code 2.
inline Report load_run(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw ConfigError("report: no such directory: " + dir);
    const fs::path mp = fs::path(dir) / "manifest.json";
    std::ifstream min(mp, std::ios::binary);
    if (!min) throw ConfigError("report: missing manifest.json in " + dir);
    nlohmann::json manifest;
    try {
        min >> manifest;
    } catch (const std::exception& e) {
        throw ConfigError("report: malformed manifest.json: " + std::string(e.what()));
    }
    if (!manifest.is_object() || !manifest.contains("experiment") ||
        !manifest["experiment"].is_string() || !manifest.contains("seed") ||
        !manifest["seed"].is_number_unsigned() || !manifest.contains("checks") ||
        !manifest["checks"].is_number_unsigned() || !manifest.contains("artifacts") ||
        !manifest["artifacts"].is_array())
        throw ConfigError("report: manifest.json is missing required fields");

    Report rep;
    rep.experiment = experiment_from_token(manifest["experiment"].get<std::string>());
    rep.seed = manifest["seed"].get<std::uint64_t>();
    for (const auto& a : manifest["artifacts"]) {
        if (!a.is_string()) throw ConfigError("report: manifest artifact names must be strings");
        const fs::path ap = fs::path(dir) / a.get<std::string>();
        if (!fs::is_regular_file(ap))
            throw ConfigError("report: missing artifact: " + a.get<std::string>());
    }

    std::ifstream sin(fs::path(dir) / "summary.csv", std::ios::binary);
    if (!sin) throw ConfigError("report: missing summary.csv in " + dir);
    std::string line;
    if (!std::getline(sin, line) || line != "name,ref,value,bound,status")
        throw ConfigError("report: summary.csv has an unexpected header");
    while (std::getline(sin, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cols;
        size_t from = 0;
        for (;;) {
            const size_t c = line.find(',', from);
            cols.push_back(line.substr(from, c - from));
            if (c == std::string::npos) break;
            from = c + 1;
        }
        if (cols.size() != 5) throw ConfigError("report: malformed summary row: " + line);
        CheckRow row;
        row.name = cols[0];
        row.ref = cols[1];
        char* end = nullptr;
        row.value = std::strtod(cols[2].c_str(), &end);
        if (end == cols[2].c_str() || *end != '\0')
            throw ConfigError("report: bad value in summary row: " + line);
        row.bound = std::strtod(cols[3].c_str(), &end);
        if (end == cols[3].c_str() || *end != '\0')
            throw ConfigError("report: bad bound in summary row: " + line);
        if (cols[4] != "pass" && cols[4] != "fail")
            throw ConfigError("report: bad status in summary row: " + line);
        row.pass = cols[4] == "pass";
        rep.rows.push_back(std::move(row));
    }
    if (rep.rows.size() != manifest["checks"].get<size_t>())
        throw ConfigError("report: summary row count disagrees with the manifest");
    return rep;
}

namespace detail {

inline void print_rows(const std::vector<CheckRow>& rows, std::ostream& os) {
    char line[192];
    std::snprintf(line, sizeof line, "%-20s %-26s %14s %14s  %s", "check", "ref", "value",
                  "bound", "status");
    os << line << "\n";
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-20s %-26s %14.6g %14.6g  %s", r.name.c_str(),
                      r.ref.c_str(), r.value, r.bound, r.pass ? "pass" : "fail");
        os << line << "\n";
    }
}

inline int enumerate_failures(const std::vector<CheckRow>& rows, std::ostream& err) {
    int fails = 0;
    for (const auto& r : rows)
        if (!r.pass) {
            ++fails;
            err << "check failed: " << r.name << " (value=" << numg(r.value)
                << ", bound=" << numg(r.bound) << ")\n";
        }
    return fails;
}

}  // namespace detail

// Exit codes: 0 all enabled checks pass, 1 check failure, 2 configuration error.
inline int cli_run(const std::string& config_path, std::ostream& out, std::ostream& err) {
    try {
        const Config cfg = parse_config_file(config_path);
        std::optional<std::uint64_t> env_seed;
        if (const char* s = std::getenv("SEED")) {
            errno = 0;
            char* end = nullptr;
            const unsigned long long v = std::strtoull(s, &end, 10);
            if (errno != 0 || end == s || *end != '\0' || s[0] == '-')
                throw ConfigError("SEED env var must be an unsigned integer, got '" +
                                  std::string(s) + "'");
            env_seed = v;
        }
        const RunResult r = run_experiment(cfg, env_seed);
        const std::string dir = cfg.get("run", "out");
        write_run(r, dir);
        out << "experiment: " << experiment_token(r.experiment) << "  seed: " << r.seed
            << "  out: " << dir << "\n";
        detail::print_rows(r.checks, out);
        const int fails = detail::enumerate_failures(r.checks, err);
        if (fails) return 1;
        out << "all " << r.checks.size() << " checks passed\n";
        return 0;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int cli_report(const std::string& dir, std::ostream& out, std::ostream& err) {
    try {
        const Report rep = load_run(dir);
        out << "experiment: " << experiment_token(rep.experiment) << "  seed: " << rep.seed
            << "\n";
        detail::print_rows(rep.rows, out);
        const int fails = detail::enumerate_failures(rep.rows, err);
        if (fails) return 1;
        out << "all " << rep.rows.size() << " checks passed\n";
        return 0;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int cli_selftest(std::ostream& out, std::ostream& err) {
    try {
        const std::vector<CheckRow> rows = selftest_checks();
        detail::print_rows(rows, out);
        const int fails = detail::enumerate_failures(rows, err);
        if (fails) return 1;
        out << "selftest passed (" << rows.size() << " checks)\n";
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace mstein
