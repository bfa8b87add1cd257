#pragma once

// Built-in catalog of smooth test functions with certified derivative
// bounds C0, C1, C2 <= 1 on each supported manifold. The constants are
// conservative closed-form roofs (see the per-function notes); C0 is also
// validated by sampling in the test suite.

#include <string>
#include <vector>

#include "mstein/stein.hpp"

namespace mstein {

inline std::vector<TestFunction> test_function_registry(const ManifoldKind& kind) {
    std::vector<TestFunction> out;
    switch (kind.family) {
        case Family::Sphere: {
            const int last = kind.ambient() - 1;
            // u = <p, x> with p the last axis: |grad u| <= 1, |Hess u| = |u| <= 1.
            out.push_back({[last](const Point& x) { return x.x[last]; }, 1.0, 1.0, 1.0, "height"});
            // u^2/8: chain rule gives 2/8, 4/8, 8/8 as derivative roofs.
            out.push_back({[last](const Point& x) { return x.x[last] * x.x[last] / 8.0; }, 0.25, 0.5,
                           1.0, "height_sq"});
            // e^{u-1}/5: roofs e^0 (1, 2, 5)/5.
            out.push_back({[last](const Point& x) { return std::exp(x.x[last] - 1.0) / 5.0; }, 0.2,
                           0.4, 1.0, "exp_height"});
            break;
        }
        case Family::Circle: {
            out.push_back({[](const Point& x) { return std::cos(x.x[0]); }, 1.0, 1.0, 1.0, "cos"});
            out.push_back({[](const Point& x) { return std::sin(x.x[0]); }, 1.0, 1.0, 1.0, "sin"});
            // smooth bump e^{cos t - 1}/5: same composition roofs as exp_height.
            out.push_back({[](const Point& x) { return std::exp(std::cos(x.x[0]) - 1.0) / 5.0; },
                           0.2, 0.4, 1.0, "bump"});
            break;
        }
        case Family::Euclidean: {
            out.push_back({[](const Point& x) { return x.x[0]; }, 1.0, 1.0, 0.0, "coord"});
            out.push_back({[](const Point& x) { return std::sin(x.x[0]); }, 1.0, 1.0, 1.0,
                           "sin_coord"});
            break;
        }
        case Family::Hyperbolic: {
            // sech rho(o, x) = 1/x_0; radial derivative roofs: |sech'| <= 1/2,
            // |sech''| <= 1, tangential Hess sech' coth = sech <= 1, third <= 1.6.
            out.push_back({[](const Point& x) { return 0.5 / x.x[0]; }, 0.25, 0.5, 0.8, "sech"});
            const Point o = detail::base_point(kind);
            // e^{-rho^2/2}/2: radial roofs 0.61, 1, 1.4; tangential <= 1.05.
            out.push_back({[o](const Point& x) {
                               const double r = distance(o, x);
                               return 0.5 * std::exp(-0.5 * r * r);
                           },
                           0.31, 0.55, 0.8, "gauss_radial"});
            break;
        }
        case Family::Rotations: {
            // entry R_00/3: k-th differential bounded by |E|_F^k = 2^{k/2}.
            out.push_back({[](const Point& x) { return x.x[0] / 3.0; }, 0.48, 0.67, 0.95, "entry"});
            // tr(R)/6: k-th differential bounded by sqrt(3) 2^{k/2}.
            out.push_back({[](const Point& x) { return (x.x[0] + x.x[4] + x.x[8]) / 6.0; }, 0.41,
                           0.6, 0.85, "trace"});
            break;
        }
    }
    return out;
}

inline TestFunction registry_function(const ManifoldKind& kind, const std::string& name) {
    for (auto& tf : test_function_registry(kind))
        if (tf.name == name) return tf;
    std::string known;
    for (const auto& tf : test_function_registry(kind)) {
        if (!known.empty()) known += ", ";
        known += tf.name;
    }
    throw std::invalid_argument("registry_function: unknown test function '" + name + "' (have: " +
                                known + ")");
}

}  // namespace mstein
