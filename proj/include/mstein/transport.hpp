#pragma once

// Empirical Wasserstein-1 distance between equal-size samples via exact
// optimal assignment on the geodesic cost matrix, exact samplers for the
// closed-form invariant laws, thinned-diffusion sampling, and CSV exchange.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mstein/sde.hpp"

namespace mstein {

enum class Provenance { DiffusionThinned, ExactSampler, External };

inline const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::DiffusionThinned: return "diffusion_thinned";
        case Provenance::ExactSampler: return "exact_sampler";
        default: return "external";
    }
}

struct SampleSet {
    ManifoldKind kind;
    std::vector<Point> points;
    Provenance provenance = Provenance::External;
};

inline void check_sample_set(const SampleSet& s) {
    if (s.points.empty()) throw std::invalid_argument("sample_set: need at least one point");
    for (const auto& q : s.points) {
        if (!(q.kind == s.kind)) throw std::invalid_argument("sample_set: point kind mismatch");
        check_point(q);
    }
}

struct AssignmentResult {
    double value = 0.0;
    std::vector<int> assignment;  // assignment[i]: index in b matched to a.points[i]
};

// Exact optimal assignment between two equal-size samples; value is the
// mean matched geodesic distance. Shortest augmenting paths with dual
// potentials on the dense cost matrix, O(n^3); the cost matrix is built in
// parallel, the solver itself runs serially for determinism. The arguments
// are put in a canonical order first, so swapping them runs the identical
// computation and the value is exactly symmetric even when the optimum is
// degenerate.
inline AssignmentResult w1_empirical(const SampleSet& a, const SampleSet& b) {
    if (!(a.kind == b.kind)) throw std::invalid_argument("w1_empirical: kind mismatch");
    if (a.points.size() != b.points.size())
        throw std::invalid_argument("w1_empirical: sample sizes differ");
    const int n = static_cast<int>(a.points.size());
    if (n < 1) throw std::invalid_argument("w1_empirical: empty samples");
    if (n > 2048) throw std::invalid_argument("w1_empirical: more than 2048 points");

    const bool swapped = [&] {
        for (size_t k = 0; k < a.points.size(); ++k)
            for (int i = 0; i < a.points[k].x.size(); ++i) {
                if (a.points[k].x[i] < b.points[k].x[i]) return false;
                if (a.points[k].x[i] > b.points[k].x[i]) return true;
            }
        return false;
    }();
    const SampleSet& s0 = swapped ? b : a;
    const SampleSet& s1 = swapped ? a : b;

    std::vector<double> cost(static_cast<size_t>(n) * n);
    parallel_for(n, [&](std::int64_t i) {
        for (int j = 0; j < n; ++j)
            cost[static_cast<size_t>(i) * n + j] =
                distance(s0.points[static_cast<size_t>(i)], s1.points[static_cast<size_t>(j)]);
    });

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> match(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = match[j0];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[static_cast<size_t>(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> asg(static_cast<size_t>(n), -1);  // s0 index -> s1 index
    for (int j = 1; j <= n; ++j) asg[static_cast<size_t>(match[j] - 1)] = j - 1;
    std::vector<double> matched(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        matched[static_cast<size_t>(i)] = cost[static_cast<size_t>(i) * n + asg[static_cast<size_t>(i)]];
    std::sort(matched.begin(), matched.end());
    double acc = 0.0;
    for (double d : matched) acc += d;

    AssignmentResult out;
    out.value = acc / static_cast<double>(n);
    if (!swapped) {
        out.assignment = std::move(asg);
    } else {
        out.assignment.assign(static_cast<size_t>(n), -1);
        for (int i = 0; i < n; ++i) out.assignment[static_cast<size_t>(asg[static_cast<size_t>(i)])] = i;
    }
    return out;
}

// Uniform draws from Rotations(3): orthogonalized Gaussian with the
// R-diagonal sign fix, then a fixed column flip when the determinant is
// negative (a fixed right translation, so uniformity is preserved).
inline SampleSet sample_haar_rotations(int n, RngStream& rng) {
    if (n < 1) throw std::invalid_argument("sample_haar_rotations: n must be >= 1");
    SampleSet out{{Family::Rotations, 3}, {}, Provenance::ExactSampler};
    out.points.reserve(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) {
        detail::Mat3 g;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) g(r, c) = rng.normal();
        Eigen::HouseholderQR<detail::Mat3> qr(g);
        detail::Mat3 q = qr.householderQ();
        const detail::Mat3 r = qr.matrixQR().triangularView<Eigen::Upper>();
        for (int c = 0; c < 3; ++c)
            if (r(c, c) < 0) q.col(c) *= -1.0;
        if (q.determinant() < 0) q.col(2) *= -1.0;
        out.points.push_back({out.kind, detail::as_vec9(q)});
    }
    return out;
}

// i.i.d. draws from the invariant law of p where a closed-form sampler
// exists: vMF on spheres (m >= 2) by inverse CDF in the polar coordinate,
// von Mises on the circle by rejection, Gaussians directly. Everything else
// reports unsupported; use sample_diffusion there.
inline SampleSet sample_exact(const Potential& p, int n, RngStream& rng) {
    if (n < 1) throw std::invalid_argument("sample_exact: n must be >= 1");
    SampleSet out{p.kind(), {}, Provenance::ExactSampler};
    out.points.reserve(static_cast<size_t>(n));

    if (const auto* g = std::get_if<GaussianEuclidean>(&p.family)) {
        const Eigen::LLT<Mat> llt(g->a);
        for (int k = 0; k < n; ++k) {
            Vec z(g->mean.size());
            for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
            // covariance A^{-1}: x = mean + U^{-1} z with A = U^T U
            Vec x = g->mean + llt.matrixU().solve(z);
            out.points.push_back({out.kind, std::move(x)});
        }
        return out;
    }
    if (const auto* vm = std::get_if<VonMisesCircle>(&p.family)) {
        while (static_cast<int>(out.points.size()) < n) {
            const double t = -M_PI + 2.0 * M_PI * rng.uniform();
            if (rng.uniform() <= std::exp(vm->c * (std::cos(t - vm->center) - 1.0))) {
                Vec v(1);
                v[0] = wrap_angle(t);
                out.points.push_back({out.kind, std::move(v)});
            }
        }
        return out;
    }
    if (const auto* vmf = std::get_if<VmfSphere>(&p.family)) {
        const int m = out.kind.m;
        if (m < 2)
            throw std::invalid_argument("sample_exact: vmf polar table needs m >= 2");
        // polar density f(t) ~ e^{c(t-1)} (1-t^2)^{(m-2)/2} on [-1, 1]
        const int K = 4096;
        const double dt = 2.0 / K;
        std::vector<double> w(K + 1);
        for (int j = 0; j <= K; ++j) {
            const double t = -1.0 + j * dt;
            w[static_cast<size_t>(j)] =
                std::exp(vmf->c * (t - 1.0)) * std::pow(std::max(0.0, 1.0 - t * t), 0.5 * (m - 2));
        }
        const std::vector<double> cum = cumulative_integral(w, dt);
        const double norm = cum.back();
        const Vec& pole = vmf->pole.x;
        for (int k = 0; k < n; ++k) {
            const double target = rng.uniform() * norm;
            const auto it = std::lower_bound(cum.begin(), cum.end(), target);
            double t;
            if (it == cum.begin()) {
                t = -1.0;
            } else {
                const size_t j = static_cast<size_t>(it - cum.begin());
                const double lo = cum[j - 1], hi = cum[j];
                const double frac = hi > lo ? (target - lo) / (hi - lo) : 0.5;
                t = -1.0 + (static_cast<double>(j - 1) + frac) * dt;
            }
            t = std::clamp(t, -1.0, 1.0);
            Vec dir;
            double nn = 0.0;
            do {
                dir = Vec(pole.size());
                for (int i = 0; i < dir.size(); ++i) dir[i] = rng.normal();
                dir -= dir.dot(pole) * pole;
                nn = dir.norm();
            } while (nn < 1e-12);
            dir /= nn;
            Vec x = t * pole + std::sqrt(std::max(0.0, 1.0 - t * t)) * dir;
            x /= x.norm();
            out.points.push_back({out.kind, std::move(x)});
        }
        return out;
    }
    throw std::invalid_argument("sample_exact: no exact sampler for " + p.name() +
                                "; use sample_diffusion");
}

// n approximately independent draws from the invariant law by thinning one
// long chain: burn-in 20/kappa, one state every 2/kappa thereafter. The
// chain starts at the potential's center and uses cfg.step_h and cfg.seed.
inline SampleSet sample_diffusion(const Potential& p, int n, double kappa, SdeConfig cfg = {}) {
    if (n < 1) throw std::invalid_argument("sample_diffusion: n must be >= 1");
    if (!(kappa > 0))
        throw std::invalid_argument("sample_diffusion: kappa must be > 0 (certificate or user)");
    check_sde_config(cfg);
    const long long first = static_cast<long long>(std::ceil(20.0 / kappa / cfg.step_h));
    const long long stride = std::max<long long>(1, std::llround(2.0 / kappa / cfg.step_h));
    const long long last = first + stride * (n - 1);
    cfg.horizon_T = (static_cast<double>(last) + 0.5) * cfg.step_h;
    const PathSample chain = simulate(potential_center(p), p, cfg);
    SampleSet out{p.kind(), {}, Provenance::DiffusionThinned};
    out.points.reserve(static_cast<size_t>(n));
    for (long long k = 0; k < n; ++k)
        out.points.push_back(chain.points[static_cast<size_t>(first + k * stride)]);
    return out;
}

namespace detail {

inline const char* family_token(Family f) {
    switch (f) {
        case Family::Euclidean: return "euclidean";
        case Family::Sphere: return "sphere";
        case Family::Hyperbolic: return "hyperbolic";
        case Family::Rotations: return "rotations";
        default: return "circle";
    }
}

inline Family family_from_token(const std::string& s) {
    if (s == "euclidean") return Family::Euclidean;
    if (s == "sphere") return Family::Sphere;
    if (s == "hyperbolic") return Family::Hyperbolic;
    if (s == "rotations") return Family::Rotations;
    if (s == "circle") return Family::Circle;
    throw std::invalid_argument("sample csv: unknown manifold token '" + s + "'");
}

}  // namespace detail

// One point per row in ambient coordinates; the header row names the kind
// and dimension. Coordinates are written with enough digits to round-trip.
inline std::string samples_csv_text(const SampleSet& s) {
    check_sample_set(s);
    std::string out = detail::family_token(s.kind.family);
    out += ',';
    out += std::to_string(s.kind.m);
    out += '\n';
    char buf[32];
    for (const auto& q : s.points) {
        for (int i = 0; i < q.x.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", q.x[i]);
            if (i) out += ',';
            out += buf;
        }
        out += '\n';
    }
    return out;
}

inline void save_samples_csv(const SampleSet& s, const std::string& path) {
    const std::string text = samples_csv_text(s);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_samples_csv: cannot open " + path);
    out << text;
    if (!out) throw std::runtime_error("save_samples_csv: write failed for " + path);
}

inline SampleSet load_samples_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_samples_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_samples_csv: empty file");
    const auto comma = line.find(',');
    if (comma == std::string::npos)
        throw std::runtime_error("load_samples_csv: malformed header '" + line + "'");
    const Family fam = detail::family_from_token(line.substr(0, comma));
    int m = 0;
    try {
        m = std::stoi(line.substr(comma + 1));
    } catch (const std::exception&) {
        throw std::runtime_error("load_samples_csv: malformed dimension in '" + line + "'");
    }
    SampleSet out{{fam, m}, {}, Provenance::External};
    const int ambient = out.kind.ambient();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        Vec x(ambient);
        std::string cell;
        for (int i = 0; i < ambient; ++i) {
            if (!std::getline(row, cell, ','))
                throw std::runtime_error("load_samples_csv: short row '" + line + "'");
            try {
                x[i] = std::stod(cell);
            } catch (const std::exception&) {
                throw std::runtime_error("load_samples_csv: bad number '" + cell + "'");
            }
        }
        if (std::getline(row, cell, ','))
            throw std::runtime_error("load_samples_csv: extra columns in '" + line + "'");
        out.points.push_back({out.kind, std::move(x)});
    }
    check_sample_set(out);
    return out;
}

}  // namespace mstein
