#pragma once
#include "core.hpp"
#include "rng.hpp"

namespace mstein {

// Supported state spaces. Sphere(m) and Hyperbolic(m) are embedded in R^{m+1}
// (hyperboloid sheet with Minkowski form <x,y> = -x0 y0 + sum xi yi).
// Rotations(3) stores the 3x3 matrix row-major; tangent components store the
// ambient derivative dR with R^T dR skew, metric g(v,w) = -1/2 tr((R^T v)(R^T w)).
// Circle stores one angle in (-pi, pi].
enum class Family { Euclidean, Sphere, Hyperbolic, Rotations, Circle };

struct ManifoldKind {
    Family family = Family::Euclidean;
    int m = 1;  // intrinsic dimension

    static ManifoldKind euclidean(int m) { return {Family::Euclidean, check_dim(m)}; }
    static ManifoldKind sphere(int m) { return {Family::Sphere, check_dim(m)}; }
    static ManifoldKind hyperbolic(int m) { return {Family::Hyperbolic, check_dim(m)}; }
    static ManifoldKind rotations(int n = 3) {
        if (n != 3) throw std::invalid_argument("Rotations: only n = 3 is supported");
        return {Family::Rotations, 3};
    }
    static ManifoldKind circle() { return {Family::Circle, 1}; }

    int ambient() const {
        switch (family) {
            case Family::Euclidean: return m;
            case Family::Sphere:
            case Family::Hyperbolic: return m + 1;
            case Family::Rotations: return 9;
            case Family::Circle: return 1;
        }
        return 0;
    }

    bool operator==(const ManifoldKind&) const = default;

    std::string name() const {
        switch (family) {
            case Family::Euclidean: return "euclidean(" + std::to_string(m) + ")";
            case Family::Sphere: return "sphere(" + std::to_string(m) + ")";
            case Family::Hyperbolic: return "hyperbolic(" + std::to_string(m) + ")";
            case Family::Rotations: return "rotations(3)";
            case Family::Circle: return "circle";
        }
        return "?";
    }

  private:
    static int check_dim(int m) {
        if (m < 1) throw std::invalid_argument("manifold dimension must be >= 1");
        return m;
    }
};

struct Point {
    ManifoldKind kind;
    Vec x;
};

struct TangentVector {
    Point base;
    Vec comps;
};

struct Frame {
    Point base;
    Mat basis;  // ambient x m, columns orthonormal in the manifold metric

    TangentVector vector(int i) const { return {base, basis.col(i)}; }
};

struct CurvatureConstants {
    double ricci_lb = 0.0;          // Ric >= ricci_lb * g
    double injectivity_radius = 0;  // +inf when there is no cut locus
};

// Thrown where a unique minimal geodesic is required but the target sits at
// (or within tol_cut of) the cut locus; carries the tie-break candidates.
struct CutLocusError : std::runtime_error {
    std::vector<TangentVector> candidates;
    CutLocusError(const std::string& msg, std::vector<TangentVector> cands)
        : std::runtime_error(msg), candidates(std::move(cands)) {}
};

enum class CutLocusPolicy { TieBreak, Strict };

inline constexpr double tol_cut = 1e-7;

namespace detail {

inline double mdot(const Vec& a, const Vec& b) {
    double s = -a[0] * b[0];
    for (int i = 1; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

using Mat3 = Eigen::Matrix3d;
using RowMat3 = Eigen::Matrix<double, 3, 3, Eigen::RowMajor>;

inline Mat3 as_mat3(const Vec& v) { return Eigen::Map<const RowMat3>(v.data()); }

inline Vec as_vec9(const Mat3& r) {
    Vec v(9);
    Eigen::Map<RowMat3>(v.data()) = r;
    return v;
}

inline Mat3 skew3(const Eigen::Vector3d& w) {
    Mat3 e;
    e << 0, -w[2], w[1], w[2], 0, -w[0], -w[1], w[0], 0;
    return e;
}

inline Eigen::Vector3d unskew3(const Mat3& e) { return {e(2, 1), e(0, 2), e(1, 0)}; }

// exp of a skew matrix by the Rodrigues closed form.
inline Mat3 rodrigues(const Mat3& e) {
    const Eigen::Vector3d w = unskew3(e);
    const double t = w.norm();
    double a, b;
    if (t < 1e-6) {
        a = 1.0 - t * t / 6.0;
        b = 0.5 - t * t / 24.0;
    } else {
        a = std::sin(t) / t;
        b = (1.0 - std::cos(t)) / (t * t);
    }
    return Mat3::Identity() + a * e + b * (e * e);
}

// Unit quaternion (w >= 0) of a rotation matrix; numerically stable pivoting.
inline Eigen::Vector4d quat_of(const Mat3& q) {
    const double t = q.trace();
    Eigen::Vector4d c;  // (w, x, y, z)
    c[0] = 1.0 + t;
    c[1] = 1.0 + 2.0 * q(0, 0) - t;
    c[2] = 1.0 + 2.0 * q(1, 1) - t;
    c[3] = 1.0 + 2.0 * q(2, 2) - t;
    int p = 0;
    c.maxCoeff(&p);
    Eigen::Vector4d u;
    const double s = 0.5 * std::sqrt(std::max(c[p], 0.0));
    switch (p) {
        case 0:
            u[0] = s;
            u[1] = (q(2, 1) - q(1, 2)) / (4 * s);
            u[2] = (q(0, 2) - q(2, 0)) / (4 * s);
            u[3] = (q(1, 0) - q(0, 1)) / (4 * s);
            break;
        case 1:
            u[1] = s;
            u[0] = (q(2, 1) - q(1, 2)) / (4 * s);
            u[2] = (q(0, 1) + q(1, 0)) / (4 * s);
            u[3] = (q(0, 2) + q(2, 0)) / (4 * s);
            break;
        case 2:
            u[2] = s;
            u[0] = (q(0, 2) - q(2, 0)) / (4 * s);
            u[1] = (q(0, 1) + q(1, 0)) / (4 * s);
            u[3] = (q(1, 2) + q(2, 1)) / (4 * s);
            break;
        default:
            u[3] = s;
            u[0] = (q(1, 0) - q(0, 1)) / (4 * s);
            u[1] = (q(0, 2) + q(2, 0)) / (4 * s);
            u[2] = (q(1, 2) + q(2, 1)) / (4 * s);
            break;
    }
    u.normalize();
    if (u[0] < 0) u = -u;
    return u;
}

// Rotation angle in [0, pi] and axis*angle vector of R^T S.
inline Eigen::Vector3d log_so3(const Mat3& q, double* angle_out = nullptr) {
    const Eigen::Vector4d u = quat_of(q);
    const Eigen::Vector3d v = u.tail<3>();
    const double vn = v.norm();
    const double theta = 2.0 * std::atan2(vn, u[0]);
    if (angle_out) *angle_out = theta;
    if (vn < 1e-12) return Eigen::Vector3d::Zero();
    return (theta / vn) * v;
}

// Two-pass Gram-Schmidt orthonormalization step for rotations renormalization.
inline Mat3 orthonormalize3(Mat3 r) {
    for (int it = 0; it < 2; ++it) r = r * (3.0 * Mat3::Identity() - r.transpose() * r) / 2.0;
    return r;
}

}  // namespace detail

inline CurvatureConstants curvature_constants(const ManifoldKind& k) {
    const double inf = std::numeric_limits<double>::infinity();
    switch (k.family) {
        case Family::Euclidean: return {0.0, inf};
        case Family::Sphere: return {static_cast<double>(k.m - 1), M_PI};
        case Family::Hyperbolic: return {static_cast<double>(-(k.m - 1)), inf};
        case Family::Rotations: return {0.5, M_PI};  // Ric = (m-2)/2 g at m = 3
        case Family::Circle: return {0.0, M_PI};
    }
    return {};
}

// Distance of the ambient representation from the manifold's constraint set.
inline double point_residual(const Point& p) {
    switch (p.kind.family) {
        case Family::Euclidean: return 0.0;
        case Family::Sphere: return std::abs(p.x.norm() - 1.0);
        case Family::Hyperbolic: {
            // relative to coordinate magnitude: the Minkowski form loses
            // |x|^2 * eps to cancellation at large radius
            const double c = std::abs(detail::mdot(p.x, p.x) + 1.0) / (1.0 + p.x.squaredNorm());
            return p.x[0] > 0 ? c : 1.0 + c;
        }
        case Family::Rotations: {
            const detail::Mat3 r = detail::as_mat3(p.x);
            double res = (r.transpose() * r - detail::Mat3::Identity()).norm();
            if (r.determinant() < 0) res += 1.0;
            return res;
        }
        case Family::Circle: return (p.x[0] > M_PI || p.x[0] <= -M_PI) ? std::abs(p.x[0]) - M_PI : 0.0;
    }
    return 0.0;
}

inline void check_point(const Point& p, double tol = 1e-9) {
    if (p.x.size() != p.kind.ambient())
        throw std::invalid_argument("point has wrong ambient size for " + p.kind.name());
    if (point_residual(p) > tol)
        throw std::invalid_argument("point violates " + p.kind.name() + " constraints");
}

// Projects the ambient representation back onto the constraint set.
inline Point renormalized(Point p) {
    switch (p.kind.family) {
        case Family::Euclidean: break;
        case Family::Sphere: p.x /= p.x.norm(); break;
        case Family::Hyperbolic: {
            const double q = -detail::mdot(p.x, p.x);
            if (q <= 0 || p.x[0] <= 0)
                throw std::invalid_argument("hyperboloid renormalization failed");
            p.x /= std::sqrt(q);
            break;
        }
        case Family::Rotations: p.x = detail::as_vec9(detail::orthonormalize3(detail::as_mat3(p.x))); break;
        case Family::Circle: p.x[0] = wrap_angle(p.x[0]); break;
    }
    return p;
}

// Orthogonal projection of an ambient vector onto the tangent space at p.
inline TangentVector project_tangent(const Point& p, Vec v) {
    switch (p.kind.family) {
        case Family::Euclidean:
        case Family::Circle: break;
        case Family::Sphere: v -= v.dot(p.x) * p.x; break;
        case Family::Hyperbolic: v += detail::mdot(v, p.x) * p.x; break;
        case Family::Rotations: {
            const detail::Mat3 r = detail::as_mat3(p.x);
            detail::Mat3 e = r.transpose() * detail::as_mat3(v);
            e = (e - e.transpose().eval()) / 2.0;
            v = detail::as_vec9(r * e);
            break;
        }
    }
    return {p, std::move(v)};
}

inline double tangency_residual(const TangentVector& t) {
    switch (t.base.kind.family) {
        case Family::Euclidean:
        case Family::Circle: return 0.0;
        case Family::Sphere: return std::abs(t.comps.dot(t.base.x));
        case Family::Hyperbolic: return std::abs(detail::mdot(t.comps, t.base.x));
        case Family::Rotations: {
            const detail::Mat3 e = detail::as_mat3(t.base.x).transpose() * detail::as_mat3(t.comps);
            return ((e + e.transpose()) / 2.0).norm();
        }
    }
    return 0.0;
}

inline double metric_inner(const TangentVector& a, const TangentVector& b) {
    switch (a.base.kind.family) {
        case Family::Euclidean:
        case Family::Sphere:
        case Family::Circle: return a.comps.dot(b.comps);
        case Family::Hyperbolic: return detail::mdot(a.comps, b.comps);
        case Family::Rotations: return 0.5 * a.comps.dot(b.comps);
    }
    return 0.0;
}

inline double tangent_norm(const TangentVector& v) {
    return std::sqrt(std::max(0.0, metric_inner(v, v)));
}

inline double distance(const Point& a, const Point& b) {
    switch (a.kind.family) {
        case Family::Euclidean: return (a.x - b.x).norm();
        case Family::Sphere: return std::acos(clamp1(a.x.dot(b.x)));
        case Family::Hyperbolic: return std::acosh(std::max(1.0, -detail::mdot(a.x, b.x)));
        case Family::Rotations: {
            double theta;
            detail::log_so3(detail::as_mat3(a.x).transpose() * detail::as_mat3(b.x), &theta);
            return theta;
        }
        case Family::Circle: return std::abs(wrap_angle(a.x[0] - b.x[0]));
    }
    return 0.0;
}

inline Point exp_map(const Point& p, const TangentVector& v) {
    Point out = p;
    switch (p.kind.family) {
        case Family::Euclidean: out.x = p.x + v.comps; break;
        case Family::Sphere: {
            const double n = v.comps.norm();
            if (n < 1e-300) break;
            out.x = std::cos(n) * p.x + (std::sin(n) / n) * v.comps;
            break;
        }
        case Family::Hyperbolic: {
            const double n = std::sqrt(std::max(0.0, detail::mdot(v.comps, v.comps)));
            if (n < 1e-300) break;
            out.x = std::cosh(n) * p.x + (std::sinh(n) / n) * v.comps;
            break;
        }
        case Family::Rotations: {
            const detail::Mat3 r = detail::as_mat3(p.x);
            detail::Mat3 e = r.transpose() * detail::as_mat3(v.comps);
            e = (e - e.transpose().eval()) / 2.0;
            out.x = detail::as_vec9(r * detail::rodrigues(e));
            break;
        }
        case Family::Circle: out.x[0] = p.x[0] + v.comps[0]; break;
    }
    return renormalized(std::move(out));
}

namespace detail {

// Lexicographically smallest unit tangent direction at p (sphere): the
// minimizer of the first ambient coordinate, ties resolved on later ones.
inline Vec lex_min_unit_tangent_sphere(const Point& p) {
    for (int k = 0; k < p.x.size(); ++k) {
        Vec w = Vec::Zero(p.x.size());
        w[k] = 1.0;
        w -= p.x[k] * p.x;
        const double n = w.norm();
        if (n > 1e-9) return -w / n;
    }
    throw std::logic_error("sphere tangent construction failed");
}

}  // namespace detail

// Riemannian logarithm. Within tol_cut of the cut locus the TieBreak policy
// returns a deterministic candidate (lexicographically smallest ambient
// components); Strict throws CutLocusError carrying the candidates.
inline TangentVector log_map(const Point& p, const Point& q,
                             CutLocusPolicy policy = CutLocusPolicy::TieBreak) {
    switch (p.kind.family) {
        case Family::Euclidean: return {p, q.x - p.x};
        case Family::Sphere: {
            const double c = clamp1(p.x.dot(q.x));
            const double theta = std::acos(c);
            if (theta >= M_PI - tol_cut) {
                const Vec u = detail::lex_min_unit_tangent_sphere(p);
                std::vector<TangentVector> cands{{p, M_PI * u}, {p, -M_PI * u}};
                if (policy == CutLocusPolicy::Strict)
                    throw CutLocusError("log_map: target at sphere antipode", std::move(cands));
                const Vec &a = cands[0].comps, &b = cands[1].comps;
                return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(),
                                                    b.data() + b.size())
                           ? cands[0]
                           : cands[1];
            }
            Vec w = q.x - c * p.x;
            const double n = w.norm();
            if (n < 1e-300) return {p, Vec::Zero(p.x.size())};
            return {p, (theta / n) * w};
        }
        case Family::Hyperbolic: {
            const double ch = std::max(1.0, -detail::mdot(p.x, q.x));
            const double d = std::acosh(ch);
            if (d < 1e-300) return {p, Vec::Zero(p.x.size())};
            Vec w = q.x - ch * p.x;
            const double n = std::sqrt(std::max(0.0, detail::mdot(w, w)));
            if (n < 1e-300) return {p, Vec::Zero(p.x.size())};
            return {p, (d / n) * w};
        }
        case Family::Rotations: {
            const detail::Mat3 r = detail::as_mat3(p.x);
            const detail::Mat3 rel = r.transpose() * detail::as_mat3(q.x);
            double theta;
            const Eigen::Vector3d w = detail::log_so3(rel, &theta);
            if (theta >= M_PI - tol_cut) {
                Eigen::Vector3d axis = w.norm() > 1e-12 ? Eigen::Vector3d(w.normalized())
                                                        : Eigen::Vector3d(1, 0, 0);
                TangentVector a{p, detail::as_vec9(r * detail::skew3(M_PI * axis))};
                TangentVector b{p, detail::as_vec9(r * detail::skew3(-M_PI * axis))};
                std::vector<TangentVector> cands{a, b};
                if (policy == CutLocusPolicy::Strict)
                    throw CutLocusError("log_map: target at angle-pi rotation", std::move(cands));
                return std::lexicographical_compare(a.comps.data(), a.comps.data() + 9,
                                                    b.comps.data(), b.comps.data() + 9)
                           ? a
                           : b;
            }
            return {p, detail::as_vec9(r * detail::skew3(w))};
        }
        case Family::Circle: {
            const double d = wrap_angle(q.x[0] - p.x[0]);
            if (std::abs(d) >= M_PI - tol_cut) {
                Vec lo(1), hi(1);
                lo[0] = -M_PI;
                hi[0] = M_PI;
                std::vector<TangentVector> cands{{p, lo}, {p, hi}};
                if (policy == CutLocusPolicy::Strict)
                    throw CutLocusError("log_map: target at circle antipode", std::move(cands));
                return cands[0];
            }
            Vec v(1);
            v[0] = d;
            return {p, v};
        }
    }
    throw std::logic_error("log_map: unknown manifold");
}

// Parallel transport of v in T_p along the unique minimal geodesic p -> q.
// Throws CutLocusError when that geodesic is ambiguous.
inline TangentVector parallel_transport(const Point& p, const Point& q, const TangentVector& v) {
    switch (p.kind.family) {
        case Family::Euclidean:
        case Family::Circle: return {q, v.comps};
        case Family::Sphere: {
            const double c = p.x.dot(q.x);
            if (std::acos(clamp1(c)) >= M_PI - tol_cut)
                log_map(p, q, CutLocusPolicy::Strict);  // throws with candidates
            Vec w = v.comps - (q.x.dot(v.comps) / (1.0 + c)) * (p.x + q.x);
            return project_tangent(q, std::move(w));
        }
        case Family::Hyperbolic: {
            const double c = detail::mdot(p.x, q.x);  // = -cosh d
            Vec w = v.comps + (detail::mdot(q.x, v.comps) / (1.0 - c)) * (p.x + q.x);
            return project_tangent(q, std::move(w));
        }
        case Family::Rotations: {
            const TangentVector l = log_map(p, q, CutLocusPolicy::Strict);
            const detail::Mat3 r = detail::as_mat3(p.x);
            const detail::Mat3 s = detail::as_mat3(q.x);
            const detail::Mat3 e = r.transpose() * detail::as_mat3(l.comps);
            const detail::Mat3 half = detail::rodrigues(e / 2.0);
            const detail::Mat3 a = r.transpose() * detail::as_mat3(v.comps);
            return project_tangent(q, detail::as_vec9(s * (half.transpose() * a * half)));
        }
    }
    throw std::logic_error("parallel_transport: unknown manifold");
}

// Deterministic orthonormal frame: index-ordered Gram-Schmidt over projected
// ambient basis vectors (body-frame basis on Rotations, which needs no GS).
inline Frame orthonormal_frame(const Point& p) {
    const int m = p.kind.m;
    Frame f{p, Mat(p.kind.ambient(), m)};
    switch (p.kind.family) {
        case Family::Euclidean: f.basis = Mat::Identity(m, m); return f;
        case Family::Circle: f.basis(0, 0) = 1.0; return f;
        case Family::Rotations: {
            const detail::Mat3 r = detail::as_mat3(p.x);
            for (int k = 0; k < 3; ++k)
                f.basis.col(k) = detail::as_vec9(r * detail::skew3(Eigen::Vector3d::Unit(k)));
            return f;
        }
        case Family::Sphere:
        case Family::Hyperbolic: break;
    }
    const bool hyp = p.kind.family == Family::Hyperbolic;
    auto dot = [&](const Vec& a, const Vec& b) { return hyp ? detail::mdot(a, b) : a.dot(b); };
    for (double threshold : {0.1, 1e-7}) {
        int got = 0;
        for (int kk = 0; kk <= m && got < m; ++kk) {
            // spatial coordinates first on the hyperboloid, so the frame at the
            // origin is exactly the ambient spatial basis
            const int k = hyp ? (kk + 1) % (m + 1) : kk;
            Vec w = Vec::Zero(m + 1);
            w[k] = 1.0;
            w = hyp ? Vec(w + detail::mdot(w, p.x) * p.x) : Vec(w - w.dot(p.x) * p.x);
            for (int j = 0; j < got; ++j) w -= dot(w, f.basis.col(j)) * f.basis.col(j);
            const double n = std::sqrt(std::max(0.0, dot(w, w)));
            if (n <= threshold) continue;
            f.basis.col(got++) = w / n;
        }
        if (got == m) return f;
    }
    throw std::logic_error("orthonormal_frame: basis construction failed");
}

// Standard Gaussian tangent draw: frame coefficients are i.i.d. N(0,1) in
// deterministic index order.
inline TangentVector gaussian_tangent(const Point& p, RngStream& rng) {
    const Frame f = orthonormal_frame(p);
    Vec v = Vec::Zero(p.kind.ambient());
    for (int i = 0; i < p.kind.m; ++i) v += rng.normal() * f.basis.col(i);
    return {p, std::move(v)};
}

}  // namespace mstein
