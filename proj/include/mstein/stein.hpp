#pragma once

// Numerical solution of the Stein equation h - E h(X) = L_phi f_h with
// L_phi = (Delta - <grad phi, grad>)/2: a Monte-Carlo time-integral
// representation on any supported manifold, an exact quadrature solver on
// the circle, and finite-difference residual / Lipschitz verification.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mstein/sde.hpp"

namespace mstein {

struct TestFunction {
    std::function<double(const Point&)> h;
    std::optional<double> c0;  // Lipschitz bound on h
    std::optional<double> c1;  // bound on the first derivative field
    std::optional<double> c2;  // bound on the second derivative field
    std::string name;
};

struct SteinConfig {
    double step_h = 0.005;
    int n_paths = 200;
    std::uint64_t seed = 0;
    double horizon_T = 0.0;  // 0: use max(10/kappa, 5)
    double chain_T = 0.0;    // 0: use 200/kappa
    double burn_in = 0.0;    // 0: use 20/kappa
};

struct SteinEstimate {
    double value = 0.0;
    double se = 0.0;
    double truncation_bound = 0.0;
    double horizon_T = 0.0;
    int n_paths = 0;
    bool horizon_warning = false;  // horizon below 3/kappa
};

namespace detail {

inline Point base_point(const ManifoldKind& kind) {
    Vec v;
    switch (kind.family) {
        case Family::Euclidean: v = Vec::Zero(kind.ambient()); break;
        case Family::Sphere:
            v = Vec::Zero(kind.ambient());
            v[0] = 1.0;
            break;
        case Family::Hyperbolic:
            v = Vec::Zero(kind.ambient());
            v[0] = 1.0;
            break;
        case Family::Rotations:
            v = Vec::Zero(9);
            v[0] = v[4] = v[8] = 1.0;
            break;
        default: v = Vec::Zero(1); break;
    }
    return {kind, v};
}

}  // namespace detail

// Random probe point: geodesic shot of random direction and radius from the
// canonical base point. Radius covers most of the manifold for compact kinds
// and a ball of radius 3 otherwise.
inline Point random_probe_point(const ManifoldKind& kind, RngStream& rng) {
    const Point base = detail::base_point(kind);
    TangentVector dir = gaussian_tangent(base, rng);
    const double n = tangent_norm(dir);
    if (n < 1e-12) return base;
    const double inj = curvature_constants(kind).injectivity_radius;
    const double reach = std::min(std::isfinite(inj) ? 0.98 * inj : 3.0, 3.0);
    dir.comps *= (reach * rng.uniform()) / n;
    return exp_map(base, dir);
}

// Point pairs at geodesic distances uniform in [lo, hi], random base and
// direction; used by the Lipschitz probe and constant validation.
inline std::vector<std::pair<Point, Point>> probe_pairs(const ManifoldKind& kind, int n, double lo,
                                                        double hi, RngStream& rng) {
    if (!(0 <= lo && lo < hi)) throw std::invalid_argument("probe_pairs: need 0 <= lo < hi");
    std::vector<std::pair<Point, Point>> out;
    out.reserve(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) {
        const Point x = random_probe_point(kind, rng);
        TangentVector dir = gaussian_tangent(x, rng);
        const double nn = tangent_norm(dir);
        if (nn < 1e-12) {
            --k;
            continue;
        }
        const double d = lo + (hi - lo) * rng.uniform();
        dir.comps *= d / nn;
        out.emplace_back(x, exp_map(x, dir));
    }
    return out;
}

// Largest sampled difference quotient |h(x)-h(y)| / rho(x,y); validates a
// declared Lipschitz constant.
inline double max_lipschitz_ratio(const TestFunction& h, const ManifoldKind& kind, RngStream& rng,
                                  int n_pairs = 1000) {
    const double inj = curvature_constants(kind).injectivity_radius;
    const double hi = std::isfinite(inj) ? 0.9 * inj : 3.0;
    const auto pairs = probe_pairs(kind, n_pairs, 1e-3, hi, rng);
    double worst = 0.0;
    for (const auto& pr : pairs) {
        const double d = distance(pr.first, pr.second);
        if (d < 1e-9) continue;
        worst = std::max(worst, std::abs(h.h(pr.first) - h.h(pr.second)) / d);
    }
    return worst;
}

// Finite-difference generator (L_phi f)(x) = (Delta f - <grad phi, grad f>)/2
// with 3-point central stencils of radius eps along the deterministic frame.
inline double fd_generator(const std::function<double(const Point&)>& f, const Potential& p,
                           const Point& x, double eps) {
    if (!(eps > 0)) throw std::invalid_argument("fd_generator: eps must be > 0");
    const Frame fr = orthonormal_frame(x);
    const TangentVector gp = grad_phi(p, x);
    const double f0 = f(x);
    double lap = 0.0, dot = 0.0;
    for (int i = 0; i < x.kind.m; ++i) {
        const Vec e = fr.basis.col(i);
        const double fp = f(exp_map(x, {x, eps * e}));
        const double fm = f(exp_map(x, {x, -eps * e}));
        lap += (fp + fm - 2.0 * f0) / (eps * eps);
        dot += metric_inner(gp, {x, e}) * (fp - fm) / (2.0 * eps);
    }
    return 0.5 * (lap - dot);
}

// Residual of the Stein equation at x for a deterministic (noise-free)
// estimate of f; mean_h is the target expectation of h.
inline double stein_residual(const Point& x, const TestFunction& h,
                             const std::function<double(const Point&)>& f, const Potential& p,
                             double mean_h, double eps) {
    return std::abs(h.h(x) - mean_h - fd_generator(f, p, x, eps));
}

// ---------------------------------------------------------------------------
// Exact first-order solver on the circle.
//
// g_h solves g' - phi' g = h - E h with g(-pi) = 0 (constant a = 0); then
// f_h' = 2 g_h up to the homogeneous solution. The closed form is
// g_h(x) = e^{phi(x)} int_{-pi}^x (h - E h) e^{-phi}, tabulated on a uniform
// grid with cubic interpolation between nodes.

struct CircleSolution {
    std::vector<double> xs;    // grid nodes, -pi .. pi inclusive
    std::vector<double> g;     // g_h at the nodes
    std::vector<double> f2;    // cumulative integral of 2 g_h from -pi
    double mean_h = 0.0;
    double normalizer = 0.0;
    double dx = 0.0;

    double value(double x) const { return interp(g, x, true); }

    // f_h with the anchor f_h(0) = 0, reconstructed from f' = 2 g.
    double antiderivative(double x) const { return interp(f2, x, false) - interp(f2, 0.0, false); }

    double max_abs_g() const {
        double m = 0.0;
        for (double v : g) m = std::max(m, std::abs(v));
        return m;
    }

    double interp(const std::vector<double>& v, double x, bool periodic) const {
        const int G = static_cast<int>(v.size()) - 1;
        double u = (wrap_angle(x) + M_PI) / dx;
        long long j = static_cast<long long>(std::floor(u));
        if (j < 0) j = 0;
        if (j > G - 1) j = G - 1;
        const double t = u - static_cast<double>(j);
        auto fetch = [&](long long k) {
            if (periodic) {
                k %= G;
                if (k < 0) k += G;
                return v[static_cast<size_t>(k)];
            }
            return v[static_cast<size_t>(std::clamp(k, 0LL, static_cast<long long>(G)))];
        };
        const double vm1 = fetch(j - 1), v0 = fetch(j), v1 = fetch(j + 1), v2 = fetch(j + 2);
        const double lm1 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        const double l0 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        const double l1 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        const double l2 = (t + 1.0) * t * (t - 1.0) / 6.0;
        return lm1 * vm1 + l0 * v0 + l1 * v1 + l2 * v2;
    }
};

inline CircleSolution circle_solve(const TestFunction& h, const Potential& p, int grid = 4096) {
    if (p.kind().family != Family::Circle)
        throw std::invalid_argument("circle_solve: potential is not on the circle");
    if (grid < 4096) throw std::invalid_argument("circle_solve: grid must be >= 4096");
    const int G = grid;
    CircleSolution sol;
    sol.dx = 2.0 * M_PI / G;
    sol.xs.resize(G + 1);
    std::vector<double> w(G + 1), hv(G + 1), hw(G + 1);
    for (int j = 0; j <= G; ++j) {
        sol.xs[j] = -M_PI + j * sol.dx;
        Vec v(1);
        v[0] = wrap_angle(sol.xs[j]);
        const Point pt{ManifoldKind::circle(), v};
        w[j] = std::exp(-phi_value(p, pt));
        hv[j] = h.h(pt);
        hw[j] = hv[j] * w[j];
    }
    const std::vector<double> cw = cumulative_integral(w, sol.dx);
    const std::vector<double> chw = cumulative_integral(hw, sol.dx);
    sol.normalizer = cw.back();
    sol.mean_h = chw.back() / sol.normalizer;
    std::vector<double> integrand(G + 1);
    for (int j = 0; j <= G; ++j) integrand[j] = (hv[j] - sol.mean_h) * w[j];
    const std::vector<double> big_f = cumulative_integral(integrand, sol.dx);
    sol.g.resize(G + 1);
    for (int j = 0; j <= G; ++j) sol.g[j] = big_f[j] / w[j];  // e^{phi} = 1/w
    std::vector<double> two_g(G + 1);
    for (int j = 0; j <= G; ++j) two_g[j] = 2.0 * sol.g[j];
    sol.f2 = cumulative_integral(two_g, sol.dx);
    return sol;
}

// Largest grid residual of the first-order equation g' - phi' g = h - E h,
// with g' from 5-point central differences (periodic stencil).
inline double circle_ode_residual(const CircleSolution& sol, const TestFunction& h,
                                  const Potential& p) {
    const int G = static_cast<int>(sol.g.size()) - 1;
    auto fetch = [&](long long k) {
        k %= G;
        if (k < 0) k += G;
        return sol.g[static_cast<size_t>(k)];
    };
    double worst = 0.0;
    for (int j = 0; j < G; ++j) {
        const double gp =
            (fetch(j - 2) - 8.0 * fetch(j - 1) + 8.0 * fetch(j + 1) - fetch(j + 2)) / (12.0 * sol.dx);
        Vec v(1);
        v[0] = wrap_angle(sol.xs[j]);
        const Point pt{ManifoldKind::circle(), v};
        const double dphi = grad_phi(p, pt).comps[0];
        const double res = std::abs(gp - dphi * sol.g[j] - (h.h(pt) - sol.mean_h));
        worst = std::max(worst, res);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Lipschitz probe.

struct LipschitzReport {
    double max_ratio = 0.0;
    int violations = 0;
    double threshold = 0.0;
};

// Max difference quotient of f over the sampled pairs against the bound
// c0h / kappa, with an optional additive noise allowance for Monte-Carlo f.
inline LipschitzReport lipschitz_probe(const std::function<double(const Point&)>& f,
                                       const std::vector<std::pair<Point, Point>>& pairs,
                                       double kappa, double c0h, double noise_allowance = 0.0) {
    if (pairs.size() < 200) throw std::invalid_argument("lipschitz_probe: need at least 200 pairs");
    if (!(kappa > 0)) throw std::invalid_argument("lipschitz_probe: kappa must be > 0");
    LipschitzReport rep;
    rep.threshold = (c0h / kappa) * (1.0 + 1e-6) + 3.0 * noise_allowance;
    for (const auto& pr : pairs) {
        const double d = distance(pr.first, pr.second);
        if (d < 1e-9) continue;
        const double ratio = std::abs(f(pr.first) - f(pr.second)) / d;
        rep.max_ratio = std::max(rep.max_ratio, ratio);
        if (ratio > rep.threshold) ++rep.violations;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Monte-Carlo Stein solver.

struct ResidualReport {
    double residual = 0.0;       // at eps
    double residual_half = 0.0;  // companion at eps/2 (discretization check)
    double noise = 0.0;          // bootstrap std of the signed statistic
    bool inconclusive = false;   // residual indistinguishable from noise
};

// f_h(x) = int_0^T [E h(X) - E h(X_{x,t})] dt, realized as a trapezoidal
// time quadrature over an ensemble of paths started at x. The target mean
// E h(X) comes from exact quadrature on the circle and from one long shared
// chain elsewhere. Path noise substreams are indexed by path number only, so
// every query point and test function sees identical draws (common random
// numbers); differences and linear combinations then cancel exactly.
class SteinSolver {
  public:
    SteinSolver(Potential p, double kappa, SteinConfig cfg = {})
        : p_(std::move(p)), kappa_(kappa), cfg_(cfg), kind_(p_.kind()) {
        if (!(kappa_ > 0))
            throw std::invalid_argument("stein: kappa must be > 0 (certified or user-supplied)");
        if (cfg_.n_paths < 2) throw std::invalid_argument("stein: need at least 2 paths");
        SdeConfig probe;
        probe.step_h = cfg_.step_h;
        check_sde_config(probe);
        circle_ = kind_.family == Family::Circle;
        const double want = cfg_.horizon_T > 0 ? cfg_.horizon_T : std::max(10.0 / kappa_, 5.0);
        n_steps_ = std::max<long long>(1, std::llround(want / cfg_.step_h));
        horizon_ = static_cast<double>(n_steps_) * cfg_.step_h;
    }

    double kappa() const { return kappa_; }
    double horizon() const { return horizon_; }
    const Potential& potential() const { return p_; }

    // Target expectation of h under the invariant law.
    MeanStderr mean_h(const TestFunction& h) {
        if (circle_) return {quadrature_mean([&](const Point& q) { return h.h(q); }), 0.0};
        if (!h.name.empty()) {
            auto it = mean_cache_.find(h.name);
            if (it != mean_cache_.end()) return it->second;
        }
        const MeanStderr ms = ergodic_mean(h.h, chain(), burn_in());
        if (!h.name.empty()) mean_cache_.emplace(h.name, ms);
        return ms;
    }

    // Mean geodesic distance from the invariant law to x.
    double mean_dist(const Point& x) {
        if (circle_) return quadrature_mean([&](const Point& q) { return distance(q, x); });
        return ergodic_mean([&](const Point& q) { return distance(q, x); }, chain(), burn_in()).mean;
    }

    SteinEstimate solve_fh(const Point& x, const TestFunction& h) {
        const MeanStderr mh = mean_h(h);
        const std::vector<double> J = path_integrals({x}, h).front();
        SteinEstimate est;
        est.horizon_T = horizon_;
        est.n_paths = cfg_.n_paths;
        est.horizon_warning = horizon_ < 3.0 / kappa_;
        double acc = 0.0;
        for (double j : J) acc += horizon_ * mh.mean - j;
        est.value = acc / static_cast<double>(J.size());
        est.se = std::sqrt(boot_variance(J) + horizon_ * mh.se * horizon_ * mh.se);
        est.truncation_bound =
            c0_of(h) * mean_dist(x) * std::exp(-kappa_ * horizon_) / kappa_;
        return est;
    }

    // Stein-equation residual at x with the generator applied to the
    // Monte-Carlo f_h by central differences. All stencil evaluations share
    // path substreams, and the bootstrap resamples paths jointly, so the
    // reported noise reflects the common-random-number cancellation.
    ResidualReport residual(const Point& x, const TestFunction& h, double eps = 0.05) {
        if (!(eps > 0)) throw std::invalid_argument("residual: eps must be > 0");
        const int m = kind_.m;
        const Frame fr = orthonormal_frame(x);
        std::vector<Point> pts;
        pts.reserve(1 + 4 * static_cast<size_t>(m));
        pts.push_back(x);
        for (int i = 0; i < m; ++i) {
            const Vec e = fr.basis.col(i);
            pts.push_back(exp_map(x, {x, eps * e}));
            pts.push_back(exp_map(x, {x, -eps * e}));
            pts.push_back(exp_map(x, {x, 0.5 * eps * e}));
            pts.push_back(exp_map(x, {x, -0.5 * eps * e}));
        }
        const auto J = path_integrals(pts, h);
        const MeanStderr mh = mean_h(h);
        const TangentVector gp = grad_phi(p_, x);
        std::vector<double> gcoef(m);
        for (int i = 0; i < m; ++i) gcoef[i] = metric_inner(gp, {x, fr.basis.col(i)});
        const double hx = h.h(x);

        auto column_mean = [&](const std::vector<double>& col, const std::vector<int>* pick) {
            double acc = 0.0;
            if (!pick) {
                for (double v : col) acc += v;
                return acc / static_cast<double>(col.size());
            }
            for (int i : *pick) acc += col[static_cast<size_t>(i)];
            return acc / static_cast<double>(pick->size());
        };
        // f values are T * mean_h - mean path integral; the constant part
        // cancels in all differences below.
        auto statistic = [&](double scale, int off_plus, int off_minus, const std::vector<int>* pick) {
            const double f0 = horizon_ * mh.mean - column_mean(J[0], pick);
            double lap = 0.0, dot = 0.0;
            for (int i = 0; i < m; ++i) {
                const double fp = horizon_ * mh.mean - column_mean(J[1 + 4 * i + off_plus], pick);
                const double fm = horizon_ * mh.mean - column_mean(J[1 + 4 * i + off_minus], pick);
                lap += (fp + fm - 2.0 * f0) / (scale * scale);
                dot += gcoef[i] * (fp - fm) / (2.0 * scale);
            }
            return hx - mh.mean - 0.5 * (lap - dot);
        };

        ResidualReport rep;
        rep.residual = std::abs(statistic(eps, 0, 1, nullptr));
        rep.residual_half = std::abs(statistic(0.5 * eps, 2, 3, nullptr));
        RngStream boot(splitmix64(cfg_.seed ^ 0xb00757a7d1ceull));
        std::vector<double> stats;
        stats.reserve(200);
        std::vector<int> pick(cfg_.n_paths);
        for (int b = 0; b < 200; ++b) {
            for (int& v : pick) v = static_cast<int>(boot.uniform_index(cfg_.n_paths));
            stats.push_back(statistic(eps, 0, 1, &pick));
        }
        double mean = 0.0;
        for (double s : stats) mean += s;
        mean /= static_cast<double>(stats.size());
        double var = 0.0;
        for (double s : stats) var += (s - mean) * (s - mean);
        var /= static_cast<double>(stats.size() - 1);
        rep.noise = std::sqrt(var + mh.se * mh.se);
        rep.inconclusive = rep.residual < 3.0 * rep.noise;
        return rep;
    }

    // Ergodic average of the finite-difference generator along the shared
    // chain; vanishes for smooth f under the invariant law.
    MeanStderr identity_check(const TestFunction& f, double eps = 0.05) {
        const PathSample& path = chain();
        const double b = burn_in();
        return ergodic_mean(
            [&](const Point& q) { return fd_generator(f.h, p_, q, eps); }, path, b);
    }

    // Per-path trapezoidal integrals of h along paths from each start;
    // column c, path i uses noise substream i regardless of c.
    std::vector<std::vector<double>> path_integrals(const std::vector<Point>& starts,
                                                    const TestFunction& h) {
        const int N = cfg_.n_paths;
        const size_t C = starts.size();
        std::vector<std::vector<double>> J(C, std::vector<double>(N));
        parallel_for(static_cast<std::int64_t>(C) * N, [&](std::int64_t idx) {
            const size_t c = static_cast<size_t>(idx) / N;
            const int i = static_cast<int>(idx % N);
            RngStream rng = RngStream(cfg_.seed).substream(static_cast<std::uint64_t>(i));
            Point q = starts[c];
            double acc = 0.5 * h.h(q);
            for (long long s = 1; s <= n_steps_; ++s) {
                q = em_step(q, p_, cfg_.step_h, gaussian_tangent(q, rng));
                acc += (s == n_steps_ ? 0.5 : 1.0) * h.h(q);
            }
            J[c][static_cast<size_t>(i)] = acc * cfg_.step_h;
        });
        return J;
    }

    const PathSample& chain() {
        if (!chain_) {
            SdeConfig sc;
            sc.step_h = cfg_.step_h;
            sc.horizon_T = cfg_.chain_T > 0 ? cfg_.chain_T : 200.0 / kappa_;
            sc.seed = splitmix64(cfg_.seed ^ 0xc4a15eed0001ull);
            chain_ = simulate(potential_center(p_), p_, sc);
        }
        return *chain_;
    }

    double burn_in() const { return cfg_.burn_in > 0 ? cfg_.burn_in : 20.0 / kappa_; }

  private:
    double quadrature_mean(const std::function<double(const Point&)>& fn) const {
        const double z = circle_normalizer(p_);
        return simpson(
                   [&](double t) {
                       Vec v(1);
                       v[0] = wrap_angle(t);
                       const Point q{ManifoldKind::circle(), v};
                       return fn(q) * std::exp(-phi_value(p_, q));
                   },
                   -M_PI, M_PI, 8192) /
               z;
    }

    double c0_of(const TestFunction& h) {
        if (h.c0) return *h.c0;
        RngStream rng(splitmix64(cfg_.seed ^ 0xc0175eedull));
        return max_lipschitz_ratio(h, kind_, rng, 1000);
    }

    // Variance of the ensemble mean by path bootstrap (200 resamples,
    // fixed internal seed).
    double boot_variance(const std::vector<double>& J) const {
        RngStream boot(splitmix64(cfg_.seed ^ 0xb0075eedull));
        const size_t N = J.size();
        std::vector<double> means;
        means.reserve(200);
        for (int b = 0; b < 200; ++b) {
            double acc = 0.0;
            for (size_t k = 0; k < N; ++k) acc += J[boot.uniform_index(N)];
            means.push_back(acc / static_cast<double>(N));
        }
        double mean = 0.0;
        for (double v : means) mean += v;
        mean /= static_cast<double>(means.size());
        double var = 0.0;
        for (double v : means) var += (v - mean) * (v - mean);
        return var / static_cast<double>(means.size() - 1);
    }

    Potential p_;
    double kappa_;
    SteinConfig cfg_;
    ManifoldKind kind_;
    bool circle_ = false;
    double horizon_ = 0.0;
    long long n_steps_ = 0;
    std::optional<PathSample> chain_;
    std::map<std::string, MeanStderr> mean_cache_;
};

}  // namespace mstein
