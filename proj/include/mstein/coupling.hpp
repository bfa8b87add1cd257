#pragma once

// Parallel-transport coupling of two Langevin diffusions sharing one noise
// source, with a distance-band guard that decouples the pair near the cut
// locus and re-couples it once the legs have drifted back together.

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mstein/sde.hpp"

namespace mstein {

enum class CoupleMode { Coupled, Independent, Merged };

inline const char* mode_name(CoupleMode m) {
    switch (m) {
        case CoupleMode::Coupled: return "coupled";
        case CoupleMode::Independent: return "independent";
        default: return "merged";
    }
}

struct CoupledPairState {
    Point x;
    Point y;
    CoupleMode mode = CoupleMode::Coupled;
    double dist = 0.0;  // cached distance(x, y)
};

// guard_on/guard_off form a hysteresis band: the pair decouples at
// dist >= guard_on and re-couples at dist <= guard_off. Infinite guards
// (the default) disable decoupling, which is only valid on manifolds
// without a cut locus.
struct CouplingConfig {
    double guard_on = std::numeric_limits<double>::infinity();
    double guard_off = std::numeric_limits<double>::infinity();
    double merge_tol = 1e-6;
    SdeConfig sde;
};

inline void check_coupling_config(const CouplingConfig& cfg, const ManifoldKind& kind) {
    check_sde_config(cfg.sde);
    if (!(cfg.merge_tol > 0)) throw std::invalid_argument("coupling: merge_tol must be > 0");
    const double inj = curvature_constants(kind).injectivity_radius;
    if (std::isinf(cfg.guard_on)) {
        if (!std::isinf(cfg.guard_off))
            throw std::invalid_argument("coupling: guard_on is infinite but guard_off is not");
        if (std::isfinite(inj))
            throw std::invalid_argument("coupling: guards are required when the manifold has a cut locus");
        return;
    }
    if (!(cfg.merge_tol < cfg.guard_off && cfg.guard_off < cfg.guard_on && cfg.guard_on < inj))
        throw std::invalid_argument("coupling: need merge_tol < guard_off < guard_on < injectivity radius");
}

// Defaults: band at (0.8, 0.9) of the injectivity radius when finite,
// guards disabled otherwise.
inline CouplingConfig make_coupling_config(const ManifoldKind& kind, const SdeConfig& sde = SdeConfig{}) {
    CouplingConfig cfg;
    cfg.sde = sde;
    const double inj = curvature_constants(kind).injectivity_radius;
    if (std::isfinite(inj)) {
        cfg.guard_on = 0.9 * inj;
        cfg.guard_off = 0.8 * inj;
    }
    check_coupling_config(cfg, kind);
    return cfg;
}

namespace detail {

inline CoupleMode next_mode(const CouplingConfig& cfg, CoupleMode prev, double d) {
    if (prev == CoupleMode::Merged) return CoupleMode::Merged;  // absorbing
    if (d <= cfg.merge_tol) return CoupleMode::Merged;
    if (prev == CoupleMode::Independent)
        return d <= cfg.guard_off ? CoupleMode::Coupled : CoupleMode::Independent;
    return d >= cfg.guard_on ? CoupleMode::Independent : CoupleMode::Coupled;
}

}  // namespace detail

inline CoupledPairState make_pair_state(const Point& x, const Point& y, const CouplingConfig& cfg) {
    if (!(x.kind == y.kind)) throw std::invalid_argument("coupling: points on different manifolds");
    check_point(x);
    check_point(y);
    const double d = distance(x, y);
    return {x, y, detail::next_mode(cfg, CoupleMode::Coupled, d), d};
}

// One step of the coupled pair: x receives a fresh frame draw, y receives the
// same draw parallel-transported along the connecting geodesic. A transport
// failure at the cut locus forces the pair into Independent mode for this
// step (y then consumes its own fresh draw so its marginal law is intact).
// Merged input keeps consuming identical transported draws and stays Merged.
inline CoupledPairState coupled_step(const CoupledPairState& s, const Potential& p,
                                     const CouplingConfig& cfg, double h, RngStream& rng) {
    if (s.mode == CoupleMode::Independent)
        throw std::invalid_argument("coupled_step: pair is in Independent mode");
    const TangentVector xi = gaussian_tangent(s.x, rng);
    const Point nx = em_step(s.x, p, h, xi);
    Point ny;
    bool forced = false;
    try {
        const TangentVector txi = parallel_transport(s.x, s.y, xi);
        ny = em_step(s.y, p, h, txi);
    } catch (const CutLocusError&) {
        const TangentVector eta = gaussian_tangent(s.y, rng);
        ny = em_step(s.y, p, h, eta);
        forced = true;
    }
    const double d = distance(nx, ny);
    CoupleMode m;
    if (forced && s.mode != CoupleMode::Merged)
        m = CoupleMode::Independent;
    else
        m = detail::next_mode(cfg, s.mode, d);
    return {nx, ny, m, d};
}

// One step with two independent frame draws; the x draw always comes first
// so trajectories are reproducible irrespective of mode history.
inline CoupledPairState independent_step(const CoupledPairState& s, const Potential& p,
                                         const CouplingConfig& cfg, double h, RngStream& rng) {
    if (s.mode != CoupleMode::Independent)
        throw std::invalid_argument("independent_step: pair is not in Independent mode");
    const TangentVector xix = gaussian_tangent(s.x, rng);
    const TangentVector xiy = gaussian_tangent(s.y, rng);
    const Point nx = em_step(s.x, p, h, xix);
    const Point ny = em_step(s.y, p, h, xiy);
    const double d = distance(nx, ny);
    return {nx, ny, detail::next_mode(cfg, s.mode, d), d};
}

inline CoupledPairState step_pair(const CoupledPairState& s, const Potential& p,
                                  const CouplingConfig& cfg, double h, RngStream& rng) {
    return s.mode == CoupleMode::Independent ? independent_step(s, p, cfg, h, rng)
                                             : coupled_step(s, p, cfg, h, rng);
}

struct CoupledRun {
    std::vector<double> times;
    std::vector<double> dists;
    std::vector<CoupleMode> modes;
    CoupledPairState final_state;
};

// Distance trajectory of the guarded coupled pair on the simulate() grid,
// stopping early once the pair has merged.
inline CoupledRun run_coupled(const Point& x0, const Point& y0, const Potential& p,
                              const CouplingConfig& cfg, RngStream& rng) {
    check_coupling_config(cfg, x0.kind);
    const double h = cfg.sde.step_h;
    const long long n = std::llround(cfg.sde.horizon_T / h);
    CoupledPairState s = make_pair_state(x0, y0, cfg);
    CoupledRun out;
    out.times.reserve(static_cast<size_t>(n) + 1);
    out.dists.reserve(static_cast<size_t>(n) + 1);
    out.modes.reserve(static_cast<size_t>(n) + 1);
    out.times.push_back(0.0);
    out.dists.push_back(s.dist);
    out.modes.push_back(s.mode);
    for (long long i = 1; i <= n; ++i) {
        if (s.mode == CoupleMode::Merged) break;
        s = step_pair(s, p, cfg, h, rng);
        out.times.push_back(static_cast<double>(i) * h);
        out.dists.push_back(s.dist);
        out.modes.push_back(s.mode);
    }
    out.final_state = std::move(s);
    return out;
}

inline CoupledRun run_coupled(const Point& x0, const Point& y0, const Potential& p,
                              const CouplingConfig& cfg) {
    RngStream rng(cfg.sde.seed);
    return run_coupled(x0, y0, p, cfg, rng);
}

struct DecayFit {
    double rate = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

// Least-squares slope of log mean(dist^ell) against time over the grid
// prefix on which every trajectory is still alive (merged runs stop early,
// so the common window ends at the earliest merge). The 95% CI comes from a
// 200-resample trajectory bootstrap with a fixed internal seed.
inline DecayFit fit_decay_rate(const std::vector<std::vector<double>>& trajs, double ell, double h) {
    if (trajs.size() < 30) throw std::invalid_argument("fit_decay_rate: need at least 30 trajectories");
    if (!(ell >= 1.0)) throw std::invalid_argument("fit_decay_rate: ell must be >= 1");
    if (!(h > 0)) throw std::invalid_argument("fit_decay_rate: h must be > 0");
    size_t window = trajs.front().size();
    for (const auto& tr : trajs) window = std::min(window, tr.size());
    const size_t n_traj = trajs.size();

    auto slope_of = [&](const std::vector<size_t>& pick) {
        std::vector<double> ts, logs;
        ts.reserve(window);
        logs.reserve(window);
        for (size_t t = 0; t < window; ++t) {
            double acc = 0.0;
            for (size_t k : pick) acc += std::pow(trajs[k][t], ell);
            acc /= static_cast<double>(pick.size());
            if (!(acc > 0)) break;  // all-zero column: window ends here
            ts.push_back(static_cast<double>(t) * h);
            logs.push_back(std::log(acc));
        }
        if (ts.size() < 2) throw std::invalid_argument("fit_decay_rate: degenerate window");
        return linear_fit(ts, logs).slope;
    };

    std::vector<size_t> all(n_traj);
    for (size_t k = 0; k < n_traj; ++k) all[k] = k;
    DecayFit fit;
    fit.rate = slope_of(all);

    RngStream boot(0x5eedf17f00ULL);
    std::vector<double> slopes;
    slopes.reserve(200);
    std::vector<size_t> pick(n_traj);
    for (int b = 0; b < 200; ++b) {
        for (size_t k = 0; k < n_traj; ++k) pick[k] = boot.uniform_index(n_traj);
        slopes.push_back(slope_of(pick));
    }
    fit.ci_lo = quantile(slopes, 0.025);
    fit.ci_hi = quantile(slopes, 0.975);
    return fit;
}

}  // namespace mstein
