#pragma once

// Closed-form Wasserstein-1 upper bounds between invariant laws, the
// regularity-constant calculators for solutions of the Stein equation, and a
// certification report for the integral metric over the bounded test-function
// class.

#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "mstein/registry.hpp"
#include "mstein/transport.hpp"

namespace mstein {

// Curvature/frame roof c2 together with the potential's derivative roofs.
// lambda aggregates them; the third-derivative machinery (C2f, eta_star)
// applies only while 6 kappa > lambda.
struct BoundConstants {
    int m = 1;
    double kappa = 0.0;
    double c2 = 0.0;  // common roof for the frame derivatives and curvature terms
    double C0_phi = 0.0, C1_phi = 0.0, C2_phi = 0.0;
    double lambda = 0.0;             // derived aggregate, see make_bound_constants
    bool third_derivative_ok = false;  // 6 kappa > lambda
};

inline BoundConstants make_bound_constants(int m, double kappa, double c2, double c0_phi,
                                           double c1_phi, double c2_phi) {
    if (m < 1) throw std::invalid_argument("bound_constants: m must be >= 1");
    if (!(kappa > 0.0)) throw std::invalid_argument("bound_constants: kappa must be > 0");
    if (c2 < 0.0 || c0_phi < 0.0 || c1_phi < 0.0 || c2_phi < 0.0)
        throw std::invalid_argument("bound_constants: derivative roofs must be >= 0");
    BoundConstants bc;
    bc.m = m;
    bc.kappa = kappa;
    bc.c2 = c2;
    bc.C0_phi = c0_phi;
    bc.C1_phi = c1_phi;
    bc.C2_phi = c2_phi;
    const double md = static_cast<double>(m);
    bc.lambda = 2.0 * md * c2 + (5.0 * std::sqrt(md) + 2.0 * md + 4.0) * c2 * c2 +
                c2 * c0_phi + c2_phi;
    bc.third_derivative_ok = 6.0 * kappa > bc.lambda;
    return bc;
}

namespace detail {

// Shared square-root factor of the second-derivative estimate. Positive
// denominator is implied by the applicability flag: 6k > lambda gives
// 4k + lambda - 16 c2^2 > (5/3) lambda - 16 c2^2 >= (55/3 - 16) c2^2 >= 0.
inline double curvature_ratio_root(const BoundConstants& bc) {
    const double md = static_cast<double>(bc.m);
    const double num = bc.lambda + (16.0 * md + 12.0) * bc.c2 * bc.c2;
    const double den = 4.0 * bc.kappa + bc.lambda - 16.0 * bc.c2 * bc.c2;
    return std::sqrt(num / den);
}

}  // namespace detail

struct FhConstants {
    double C0f = 0.0;
    double C1f = 0.0;
    std::optional<double> C2f;
    std::string note;  // reason when C2f is absent
};

// Regularity roofs for the Stein solution in terms of the test function's
// roofs: C0f = C0h/kappa, C1f = C1h/kappa, and the second-derivative
// Lipschitz roof when the applicability condition holds.
inline FhConstants fh_constant_bounds(double c0h, double c1h, double c2h,
                                      const BoundConstants& bc) {
    if (c0h < 0.0 || c1h < 0.0 || c2h < 0.0)
        throw std::invalid_argument("fh_constant_bounds: test-function roofs must be >= 0");
    FhConstants out;
    out.C0f = c0h / bc.kappa;
    out.C1f = c1h / bc.kappa;
    if (bc.third_derivative_ok) {
        out.C2f = (2.0 / bc.kappa) * (detail::curvature_ratio_root(bc) * c1h + c2h);
    } else {
        std::ostringstream os;
        os << "second-derivative roof needs 6*kappa > lambda (6*" << bc.kappa << " <= "
           << bc.lambda << ")";
        out.note = os.str();
    }
    return out;
}

inline double eta_constants(double c0f, double c1f, double c2f, double c0_phi, double c1_phi,
                            int m) {
    if (!(std::isfinite(c0f) && std::isfinite(c1f) && std::isfinite(c2f) &&
          std::isfinite(c0_phi) && std::isfinite(c1_phi)))
        throw std::invalid_argument("eta_constants: all inputs must be finite");
    return static_cast<double>(m) * c2f + c0_phi * c1f + c1_phi * c0f;
}

// Proportionality constant between the integral metric over the bounded
// class and the mean coupling distance.
inline double eta_star(const BoundConstants& bc) {
    if (!bc.third_derivative_ok)
        throw std::invalid_argument("eta_star: needs 6*kappa > lambda");
    return (detail::curvature_ratio_root(bc) + 2.0 * static_cast<double>(bc.m) + bc.C0_phi +
            bc.C1_phi) /
           bc.kappa;
}

// Mixed-rate transport bound: mean over the sample of
// |grad psi / (2 kappa_phi) - grad phi / (2 kappa_psi)| in the tangent norm.
inline double wasserstein_bound_mixed(const Potential& phi, const Potential& psi,
                                      const SampleSet& z, double kappa_phi, double kappa_psi) {
    if (!(phi.kind() == psi.kind()) || !(phi.kind() == z.kind))
        throw std::invalid_argument("wasserstein_bound: manifold mismatch");
    if (z.points.empty()) throw std::invalid_argument("wasserstein_bound: empty sample");
    if (!(kappa_phi > 0.0) || !(kappa_psi > 0.0))
        throw std::invalid_argument("wasserstein_bound: kappa must be > 0");
    const double a = 1.0 / (2.0 * kappa_phi);
    const double b = 1.0 / (2.0 * kappa_psi);
    double acc = 0.0;
    for (const auto& q : z.points) {
        const TangentVector gpsi = grad_phi(psi, q);
        const TangentVector gphi = grad_phi(phi, q);
        const TangentVector diff{q, a * gpsi.comps - b * gphi.comps};
        acc += tangent_norm(diff);
    }
    return acc / static_cast<double>(z.points.size());
}

// Equal-rate transport bound (1/2 kappa) E |grad(psi - phi)(Z)| with Z drawn
// from the psi law.
inline double wasserstein_bound_general(const Potential& phi, const Potential& psi,
                                        const SampleSet& z, double kappa) {
    return wasserstein_bound_mixed(phi, psi, z, kappa, kappa);
}

// Closed-form bound between two sphere concentration laws with poles x1, x2:
// c*/(4 kappa) * sum_i (rho(x*, x_i) + mean_rho_i), where c* x* = c2 x2 - c1 x1
// and mean_rho_i is a supplied Monte-Carlo estimate of E rho(x_i, X_i).
inline double vmf_vmf_bound(const Point& x1, double c1, const Point& x2, double c2,
                            double kappa, double mean_rho_1, double mean_rho_2) {
    if (!(x1.kind == x2.kind) || x1.kind.family != Family::Sphere)
        throw std::invalid_argument("vmf_vmf_bound: poles must share one sphere");
    if (!(kappa > 0.0)) throw std::invalid_argument("vmf_vmf_bound: kappa must be > 0");
    if (c1 < 0.0 || c2 < 0.0 || mean_rho_1 < 0.0 || mean_rho_2 < 0.0)
        throw std::invalid_argument("vmf_vmf_bound: negative input");
    const Vec diff = c2 * x2.x - c1 * x1.x;
    const double cstar = diff.norm();
    if (cstar == 0.0) return 0.0;
    const Point xstar{x1.kind, diff / cstar};
    const double r1 = distance(xstar, x1);
    const double r2 = distance(xstar, x2);
    return cstar / (4.0 * kappa) * ((r1 + mean_rho_1) + (r2 + mean_rho_2));
}

// Bound between a one-pole concentration law and its two-pole (second-moment)
// tilt: (c2 / 2 kappa) * mean |sin(2 rho(x2, z_i))| over a sample of the
// tilted law.
inline double fisher_watson_bound(const Point& x2, double c2, double kappa,
                                  const SampleSet& z) {
    if (x2.kind.family != Family::Sphere || !(x2.kind == z.kind))
        throw std::invalid_argument("fisher_watson_bound: sample must live on the pole's sphere");
    if (z.points.empty()) throw std::invalid_argument("fisher_watson_bound: empty sample");
    if (!(kappa > 0.0)) throw std::invalid_argument("fisher_watson_bound: kappa must be > 0");
    if (c2 < 0.0) throw std::invalid_argument("fisher_watson_bound: c2 must be >= 0");
    double acc = 0.0;
    for (const auto& q : z.points) acc += std::abs(std::sin(2.0 * distance(x2, q)));
    return c2 / (2.0 * kappa) * acc / static_cast<double>(z.points.size());
}

// Bound between the uniform law on Rotations(3) and a concentration tilt:
// (c / 2 kappa) * mean sqrt(3 - tr(Z_i^2)) over fresh uniform draws.
inline double so_uniform_bound(double c, double kappa, int n, RngStream& rng) {
    if (n < 1) throw std::invalid_argument("so_uniform_bound: n must be >= 1");
    if (!(kappa > 0.0)) throw std::invalid_argument("so_uniform_bound: kappa must be > 0");
    if (c < 0.0) throw std::invalid_argument("so_uniform_bound: c must be >= 0");
    const SampleSet haar = sample_haar_rotations(n, rng);
    double acc = 0.0;
    for (const auto& q : haar.points) {
        const detail::Mat3 z = detail::as_mat3(q.x);
        acc += std::sqrt(std::max(0.0, 3.0 - (z * z).trace()));
    }
    return c / (2.0 * kappa) * acc / static_cast<double>(n);
}

struct BoundReport {
    double bound_value = 0.0;               // right side of the checked inequality
    std::optional<double> empirical_w1;     // assignment-coupling mean distance
    double mc_stderr = 0.0;                 // standard error of the discrepancy
    double discrepancy = 0.0;               // largest mean gap over the registry
    std::string witness;                    // registry function attaining it
    std::string inputs;                     // echo of the numeric inputs
    bool pass = false;
};

// Checks eta_star * E rho(X,Z) against the integral metric from below: the
// left side is the largest |mean h(Z) - mean h(X)| over the built-in registry
// (every entry has all roofs <= 1), the coupling is the assignment coupling,
// which minimizes E rho and therefore gives the strictest checkable instance.
inline BoundReport dh_bound_check(const SampleSet& z, const SampleSet& x,
                                  double eta_star_value) {
    if (!(z.kind == x.kind)) throw std::invalid_argument("dh_bound_check: kind mismatch");
    if (!(eta_star_value >= 0.0))
        throw std::invalid_argument("dh_bound_check: eta_star must be >= 0");
    const auto registry = test_function_registry(z.kind);
    if (registry.empty()) throw std::invalid_argument("dh_bound_check: empty registry");

    const AssignmentResult w1 = w1_empirical(z, x);
    BoundReport report;
    report.bound_value = eta_star_value * w1.value;
    report.empirical_w1 = w1.value;

    const double nz = static_cast<double>(z.points.size());
    const double nx = static_cast<double>(x.points.size());
    report.discrepancy = -1.0;  // any gap, including zero, beats this
    for (const auto& fn : registry) {
        double mz = 0.0, vz = 0.0, mx = 0.0, vx = 0.0;
        for (const auto& q : z.points) {
            const double v = fn.h(q);
            mz += v;
            vz += v * v;
        }
        for (const auto& q : x.points) {
            const double v = fn.h(q);
            mx += v;
            vx += v * v;
        }
        mz /= nz;
        mx /= nx;
        vz = vz / nz - mz * mz;
        vx = vx / nx - mx * mx;
        const double gap = std::abs(mz - mx);
        if (gap > report.discrepancy) {
            report.discrepancy = gap;
            report.mc_stderr = std::sqrt(std::max(0.0, vz) / nz + std::max(0.0, vx) / nx);
            report.witness = fn.name;
        }
    }
    std::ostringstream os;
    os << "eta_star=" << eta_star_value << " n=" << z.points.size();
    report.inputs = os.str();
    report.pass = report.discrepancy <= report.bound_value + 3.0 * report.mc_stderr;
    return report;
}

}  // namespace mstein
