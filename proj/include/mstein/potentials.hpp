#pragma once
#include <optional>
#include <variant>

#include "geometry.hpp"

namespace mstein {

// Log-density potentials phi with invariant measure proportional to exp(-phi).

struct VmfSphere {
    Point pole;  // mode direction x0
    double c;    // concentration; phi(x) = -c cos dist(pole, x)
};

struct SqDistHyperbolic {
    Point origin;
    double c;  // phi(x) = c dist(origin, x)^2
};

struct VmfRotations {
    Point s0;  // parameter matrix S0; phi(S) = -c tr(S0 S), mode at S0^T
    double c;
};

struct GaussianEuclidean {
    Vec mean;
    Mat a;  // symmetric positive definite; phi(x) = (x-mean)^T A (x-mean) / 2
};

struct VonMisesCircle {
    double center;
    double c;  // c >= 0; c = 0 is the uniform law
};

struct FisherWatsonSphere {
    Point x1, x2;
    double c1, c2;  // phi(x) = -c1 cos dist(x1,x) - c2 cos^2 dist(x2,x)
};

struct Potential {
    std::variant<VmfSphere, SqDistHyperbolic, VmfRotations, GaussianEuclidean, VonMisesCircle,
                 FisherWatsonSphere>
        family;

    ManifoldKind kind() const {
        return std::visit(
            [](const auto& f) -> ManifoldKind {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, VmfSphere>) return f.pole.kind;
                else if constexpr (std::is_same_v<T, SqDistHyperbolic>) return f.origin.kind;
                else if constexpr (std::is_same_v<T, VmfRotations>) return f.s0.kind;
                else if constexpr (std::is_same_v<T, GaussianEuclidean>)
                    return ManifoldKind::euclidean(static_cast<int>(f.mean.size()));
                else if constexpr (std::is_same_v<T, VonMisesCircle>) return ManifoldKind::circle();
                else return f.x1.kind;
            },
            family);
    }

    std::string name() const {
        return std::visit(
            [](const auto& f) -> std::string {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, VmfSphere>) return "vmf_sphere";
                else if constexpr (std::is_same_v<T, SqDistHyperbolic>) return "sqdist_hyperbolic";
                else if constexpr (std::is_same_v<T, VmfRotations>) return "vmf_rotations";
                else if constexpr (std::is_same_v<T, GaussianEuclidean>) return "gaussian_euclidean";
                else if constexpr (std::is_same_v<T, VonMisesCircle>) return "von_mises_circle";
                else return "fisher_watson_sphere";
            },
            family);
    }
};

inline Potential make_vmf_sphere(Point pole, double c) {
    if (pole.kind.family != Family::Sphere) throw std::invalid_argument("vmf_sphere: pole not on a sphere");
    check_point(pole);
    if (!(c > 0)) throw std::invalid_argument("vmf_sphere: c must be > 0");
    return {VmfSphere{std::move(pole), c}};
}

inline Potential make_sqdist_hyperbolic(Point origin, double c) {
    if (origin.kind.family != Family::Hyperbolic)
        throw std::invalid_argument("sqdist_hyperbolic: origin not on a hyperboloid");
    check_point(origin);
    if (!(c > 0)) throw std::invalid_argument("sqdist_hyperbolic: c must be > 0");
    return {SqDistHyperbolic{std::move(origin), c}};
}

inline Potential make_vmf_rotations(Point s0, double c) {
    if (s0.kind.family != Family::Rotations)
        throw std::invalid_argument("vmf_rotations: S0 not a rotation");
    check_point(s0);
    if (!(c > 0)) throw std::invalid_argument("vmf_rotations: c must be > 0");
    return {VmfRotations{std::move(s0), c}};
}

inline Potential make_gaussian_euclidean(Vec mean, Mat a) {
    if (a.rows() != a.cols() || a.rows() != mean.size())
        throw std::invalid_argument("gaussian_euclidean: A and mean sizes disagree");
    if ((a - a.transpose()).norm() > 1e-9 * (1.0 + a.norm()))
        throw std::invalid_argument("gaussian_euclidean: A must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(a);
    if (es.eigenvalues().minCoeff() <= 0)
        throw std::invalid_argument("gaussian_euclidean: A must be positive definite");
    return {GaussianEuclidean{std::move(mean), std::move(a)}};
}

inline Potential make_von_mises_circle(double center, double c) {
    if (!(c >= 0)) throw std::invalid_argument("von_mises_circle: c must be >= 0");
    return {VonMisesCircle{wrap_angle(center), c}};
}

inline Potential make_fisher_watson(Point x1, Point x2, double c1, double c2) {
    if (x1.kind.family != Family::Sphere || !(x2.kind == x1.kind))
        throw std::invalid_argument("fisher_watson: directions must lie on one sphere");
    check_point(x1);
    check_point(x2);
    if (!(c1 > 0) || !(c2 > 0)) throw std::invalid_argument("fisher_watson: c1, c2 must be > 0");
    return {FisherWatsonSphere{std::move(x1), std::move(x2), c1, c2}};
}

inline double phi_value(const Potential& p, const Point& x) {
    return std::visit(
        [&](const auto& f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, VmfSphere>) {
                return -f.c * std::cos(distance(f.pole, x));
            } else if constexpr (std::is_same_v<T, SqDistHyperbolic>) {
                const double r = distance(f.origin, x);
                return f.c * r * r;
            } else if constexpr (std::is_same_v<T, VmfRotations>) {
                const auto s0 = detail::as_mat3(f.s0.x);
                const auto s = detail::as_mat3(x.x);
                return -f.c * (s0 * s).trace();
            } else if constexpr (std::is_same_v<T, GaussianEuclidean>) {
                const Vec d = x.x - f.mean;
                return 0.5 * d.dot(f.a * d);
            } else if constexpr (std::is_same_v<T, VonMisesCircle>) {
                return -f.c * std::cos(x.x[0] - f.center);
            } else {
                const double r1 = distance(f.x1, x), r2 = distance(f.x2, x);
                return -f.c1 * std::cos(r1) - f.c2 * std::cos(r2) * std::cos(r2);
            }
        },
        p.family);
}

namespace detail {

// dg/dr * (unit radial field pointing away from center); zero at the center,
// cut-locus error at the far cut point of the center.
inline Vec radial_gradient(const Point& center, const Point& x, double dg_dr) {
    const double r = distance(center, x);
    if (r < 1e-12) return Vec::Zero(x.kind.ambient());
    const TangentVector to_center = log_map(x, center, CutLocusPolicy::Strict);
    return (-dg_dr / r) * to_center.comps;
}

}  // namespace detail

// Riemannian gradient of phi at x (tangent vector at x).
inline TangentVector grad_phi(const Potential& p, const Point& x) {
    Vec g = std::visit(
        [&](const auto& f) -> Vec {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, VmfSphere>) {
                const double r = distance(f.pole, x);
                return detail::radial_gradient(f.pole, x, f.c * std::sin(r));
            } else if constexpr (std::is_same_v<T, SqDistHyperbolic>) {
                const double r = distance(f.origin, x);
                return detail::radial_gradient(f.origin, x, 2.0 * f.c * r);
            } else if constexpr (std::is_same_v<T, VmfRotations>) {
                const auto s0 = detail::as_mat3(f.s0.x);
                const auto s = detail::as_mat3(x.x);
                const detail::Mat3 m = s0 * s;
                const detail::Mat3 e = f.c * (m - m.transpose().eval());
                return detail::as_vec9(s * e);
            } else if constexpr (std::is_same_v<T, GaussianEuclidean>) {
                return f.a * (x.x - f.mean);
            } else if constexpr (std::is_same_v<T, VonMisesCircle>) {
                Vec v(1);
                v[0] = f.c * std::sin(x.x[0] - f.center);
                return v;
            } else {
                const double r1 = distance(f.x1, x), r2 = distance(f.x2, x);
                Vec v = detail::radial_gradient(f.x1, x, f.c1 * std::sin(r1));
                v += detail::radial_gradient(f.x2, x, f.c2 * std::sin(2.0 * r2));
                return v;
            }
        },
        p.family);
    return project_tangent(x, std::move(g));
}

// Certificate for the contraction condition Ric + Hess phi >= 2 kappa g.
struct A1Certificate {
    std::optional<double> kappa;  // present only when the certified rate is > 0
    double ricci_lb = 0.0;
    double hess_lb = 0.0;  // certified lower bound on Hess phi; -inf when unknown
    std::string note;
};

inline A1Certificate a1_certificate(const Potential& p) {
    A1Certificate cert;
    const ManifoldKind k = p.kind();
    cert.ricci_lb = curvature_constants(k).ricci_lb;
    const double inf = std::numeric_limits<double>::infinity();
    std::visit(
        [&](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, VmfSphere>) {
                cert.hess_lb = -f.c;
                cert.note = "needs c < m - 1";
            } else if constexpr (std::is_same_v<T, SqDistHyperbolic>) {
                cert.hess_lb = 2.0 * f.c;
                cert.note = "needs c > (m - 1) / 2";
            } else if constexpr (std::is_same_v<T, VmfRotations>) {
                cert.hess_lb = -f.c;
                cert.note = "needs c < (m - 2) / 2";
            } else if constexpr (std::is_same_v<T, GaussianEuclidean>) {
                Eigen::SelfAdjointEigenSolver<Mat> es(f.a);
                cert.hess_lb = es.eigenvalues().minCoeff();
                cert.note = "lambda_min(A)";
            } else if constexpr (std::is_same_v<T, VonMisesCircle>) {
                cert.hess_lb = -f.c;
                cert.note = "flat circle: certificate fails for every c > 0";
            } else {
                cert.hess_lb = -inf;
                cert.note = "no certified Hessian bound; supply kappa externally";
            }
        },
        p.family);
    const double kappa = (cert.ricci_lb + cert.hess_lb) / 2.0;
    if (std::isfinite(cert.hess_lb) && kappa > 0) cert.kappa = kappa;
    return cert;
}

// Certified sup-norm bounds for phi and its first three derivative tensors.
// Conservative (+inf where no documented bound is available).
struct PhiLipschitz {
    double c0 = 0.0, c1 = 0.0, c2 = 0.0;
};

inline PhiLipschitz lipschitz_constants_phi(const Potential& p) {
    const double inf = std::numeric_limits<double>::infinity();
    return std::visit(
        [&](const auto& f) -> PhiLipschitz {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, VmfSphere>) {
                // each derivative tensor of -c cos r is c times products of
                // sin r, cos r and unit radial terms, all bounded by 1
                return {f.c, f.c, f.c};
            } else if constexpr (std::is_same_v<T, SqDistHyperbolic>) {
                return {inf, inf, inf};  // grad 2cr and Hess 2c r coth r are unbounded
            } else if constexpr (std::is_same_v<T, VmfRotations>) {
                // |grad| = c sqrt(m - tr((S0 S)^2)) and tr(Q^2) >= -1 on SO(3)
                return {2.0 * f.c, inf, inf};
            } else if constexpr (std::is_same_v<T, GaussianEuclidean>) {
                return {inf, f.a.operatorNorm(), 0.0};
            } else if constexpr (std::is_same_v<T, VonMisesCircle>) {
                return {f.c, f.c, f.c};
            } else {
                return {f.c1 + f.c2, inf, inf};  // |grad| <= c1|sin r1| + c2|sin 2 r2|
            }
        },
        p.family);
}

// Mode of the invariant density (a minimizer of phi); used as the canonical
// chain start point. For the two-center Fisher-Watson family this returns the
// primary attractor x1, which is a stationary point but not always the global
// minimizer.
inline Point potential_center(const Potential& p) {
    return std::visit(
        [](const auto& f) -> Point {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, VmfSphere>) {
                return f.pole;
            } else if constexpr (std::is_same_v<T, SqDistHyperbolic>) {
                return f.origin;
            } else if constexpr (std::is_same_v<T, VmfRotations>) {
                const auto s0 = detail::as_mat3(f.s0.x);
                const detail::Mat3 mode = s0.transpose();
                Point out{f.s0.kind, detail::as_vec9(mode)};
                return out;
            } else if constexpr (std::is_same_v<T, GaussianEuclidean>) {
                return {ManifoldKind::euclidean(static_cast<int>(f.mean.size())), f.mean};
            } else if constexpr (std::is_same_v<T, VonMisesCircle>) {
                Vec v(1);
                v[0] = wrap_angle(f.center);
                return {ManifoldKind::circle(), v};
            } else {
                return f.x1;
            }
        },
        p.family);
}

// Normalizing constant of exp(-phi) d theta on the circle (composite Simpson,
// 4096 intervals).
inline double circle_normalizer(const Potential& p) {
    if (p.kind().family != Family::Circle)
        throw std::invalid_argument("circle_normalizer: potential is not on the circle");
    return simpson(
        [&](double t) {
            Vec v(1);
            v[0] = wrap_angle(t);
            return std::exp(-phi_value(p, {ManifoldKind::circle(), v}));
        },
        -M_PI, M_PI, 4096);
}

}  // namespace mstein
