#pragma once
#include "potentials.hpp"

namespace mstein {

struct SdeConfig {
    double step_h = 0.005;
    double horizon_T = 1.0;
    std::uint64_t seed = 0;
    double burn_in = 0.0;
    bool allow_large_step = false;  // lifts the step_h <= 0.05 guard
};

inline void check_sde_config(const SdeConfig& cfg) {
    if (!(cfg.step_h > 0)) throw std::invalid_argument("sde: step_h must be > 0");
    if (cfg.step_h > 0.05 && !cfg.allow_large_step)
        throw std::invalid_argument("sde: step_h > 0.05 requires allow_large_step");
    if (!(cfg.horizon_T >= 0)) throw std::invalid_argument("sde: horizon_T must be >= 0");
}

struct PathSample {
    std::vector<double> times;
    std::vector<Point> points;
};

// One geodesic Euler step: exp_x(sqrt(h) xi - (h/2) grad phi(x)). xi is an
// unscaled standard normal frame draw at x. If the gradient hits a cut-locus
// singularity the start point is nudged once by a deterministic frame jiggle
// and the step retried. The jiggle distance must exceed tol_cut, or the
// nudged point can remain inside the detection band and the retry rethrows;
// 10 * tol_cut clears the band from any interior point in one move.
inline Point em_step(const Point& x, const Potential& p, double h, const TangentVector& xi) {
    if (!(h > 0)) throw std::invalid_argument("em_step: h must be > 0");
    Point base = x;
    bool jiggled = false;
    TangentVector g{x, Vec()};
    try {
        g = grad_phi(p, base);
    } catch (const CutLocusError&) {
        const Frame f = orthonormal_frame(x);
        Vec j = Vec::Zero(x.kind.ambient());
        for (int i = 0; i < x.kind.m; ++i) j += f.basis.col(i);
        const double amp = 10.0 * tol_cut / std::sqrt(static_cast<double>(x.kind.m));
        base = exp_map(x, {x, amp * j});
        g = grad_phi(p, base);
        jiggled = true;
    }
    TangentVector inc{base, std::sqrt(h) * xi.comps - (h / 2.0) * g.comps};
    if (jiggled) inc.comps = project_tangent(base, inc.comps).comps;
    return exp_map(base, inc);
}

inline PathSample simulate(const Point& x0, const Potential& p, const SdeConfig& cfg,
                           RngStream& rng) {
    check_sde_config(cfg);
    check_point(x0);
    if (!(x0.kind == p.kind())) throw std::invalid_argument("simulate: kind mismatch");
    const auto n = static_cast<std::int64_t>(std::llround(cfg.horizon_T / cfg.step_h));
    PathSample path;
    path.times.reserve(n + 1);
    path.points.reserve(n + 1);
    Point x = x0;
    path.times.push_back(0.0);
    path.points.push_back(x);
    for (std::int64_t i = 1; i <= n; ++i) {
        const TangentVector xi = gaussian_tangent(x, rng);
        x = em_step(x, p, cfg.step_h, xi);
        path.times.push_back(static_cast<double>(i) * cfg.step_h);
        path.points.push_back(x);
    }
    return path;
}

inline PathSample simulate(const Point& x0, const Potential& p, const SdeConfig& cfg) {
    RngStream rng(cfg.seed);
    return simulate(x0, p, cfg, rng);
}

// Time average of fn over post-burn-in nodes, stderr via 16 batch means.
inline MeanStderr ergodic_mean(const std::function<double(const Point&)>& fn,
                               const PathSample& path, double burn_in) {
    std::vector<double> vals;
    vals.reserve(path.times.size());
    for (size_t i = 0; i < path.times.size(); ++i)
        if (path.times[i] >= burn_in - 1e-12) vals.push_back(fn(path.points[i]));
    if (vals.empty()) throw std::invalid_argument("ergodic_mean: empty post-burn-in window");
    return batch_means(vals, 16);
}

struct FlowDerivative {
    std::vector<double> times;
    std::vector<double> norms;  // distance(X_t, X^eps_t) / eps
    std::vector<char> valid;    // 0 where the pair straddles a cut-locus band
};

// Pathwise derivative of the flow along v by finite differences: a second
// trajectory starts at exp_x(eps v) and consumes the same frame noise,
// parallel-transported along the connecting minimal geodesic each step.
inline FlowDerivative flow_derivative_fd(const Point& x, const TangentVector& v,
                                         const Potential& p, const SdeConfig& cfg, double eps,
                                         RngStream& rng) {
    check_sde_config(cfg);
    if (!(eps >= 1e-6 && eps <= 1e-3))
        throw std::invalid_argument("flow_derivative_fd: eps must lie in [1e-6, 1e-3]");
    const auto n = static_cast<std::int64_t>(std::llround(cfg.horizon_T / cfg.step_h));
    const double inj = curvature_constants(x.kind).injectivity_radius;
    const double cut_band = std::isfinite(inj) ? 0.98 * inj : std::numeric_limits<double>::infinity();
    FlowDerivative out;
    out.times.reserve(n + 1);
    out.norms.reserve(n + 1);
    out.valid.reserve(n + 1);
    Point xa = x;
    Point xb = exp_map(x, {x, eps * v.comps});
    auto record = [&](std::int64_t i, bool ok) {
        out.times.push_back(static_cast<double>(i) * cfg.step_h);
        out.norms.push_back(distance(xa, xb) / eps);
        out.valid.push_back(ok ? 1 : 0);
    };
    record(0, true);
    for (std::int64_t i = 1; i <= n; ++i) {
        const TangentVector xi = gaussian_tangent(xa, rng);
        bool ok = distance(xa, xb) < cut_band;
        TangentVector xib{xb, Vec()};
        try {
            xib = parallel_transport(xa, xb, xi);
        } catch (const CutLocusError&) {
            xib = project_tangent(xb, xi.comps);
            ok = false;
        }
        xa = em_step(xa, p, cfg.step_h, xi);
        xb = em_step(xb, p, cfg.step_h, xib);
        record(i, ok);
    }
    return out;
}

inline FlowDerivative flow_derivative_fd(const Point& x, const TangentVector& v,
                                         const Potential& p, const SdeConfig& cfg, double eps) {
    RngStream rng(cfg.seed);
    return flow_derivative_fd(x, v, p, cfg, eps, rng);
}

}  // namespace mstein
