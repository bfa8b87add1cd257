#include <catch2/catch_amalgamated.hpp>

#include "mstein/sde.hpp"

using namespace mstein;

namespace {

Point sphere_pt(std::initializer_list<double> c) {
    Vec v(static_cast<int>(c.size()));
    int i = 0;
    for (double t : c) v[i++] = t;
    return {ManifoldKind::sphere(static_cast<int>(c.size()) - 1), v.normalized()};
}

Point circle_pt(double t) {
    Vec v(1);
    v[0] = wrap_angle(t);
    return {ManifoldKind::circle(), v};
}

Point euclid_pt(std::initializer_list<double> c) {
    Vec v(static_cast<int>(c.size()));
    int i = 0;
    for (double t : c) v[i++] = t;
    return {ManifoldKind::euclidean(static_cast<int>(c.size())), v};
}

// Quadrature reference for stationary means on the circle.
double circle_stationary_mean(const Potential& p, const std::function<double(double)>& f) {
    const double z = circle_normalizer(p);
    return simpson(
               [&](double t) {
                   Vec v(1);
                   v[0] = wrap_angle(t);
                   return f(t) * std::exp(-phi_value(p, {ManifoldKind::circle(), v}));
               },
               -M_PI, M_PI, 8192) /
           z;
}

}  // namespace

TEST_CASE("em_step closed forms") {
    SECTION("euclidean drift-only step") {
        const Potential p = make_gaussian_euclidean(Vec::Zero(2), Mat::Identity(2, 2));
        const Point x = euclid_pt({1, 0});
        TangentVector zero{x, Vec::Zero(2)};
        const Point y = em_step(x, p, 0.01, zero);
        REQUIRE(y.x[0] == Catch::Approx(0.995).margin(1e-15));
        REQUIRE(y.x[1] == 0.0);
    }
    SECTION("zero drift reduces to exp of scaled noise") {
        const Potential p = make_von_mises_circle(0.0, 0.0);
        const Point x = circle_pt(0.3);
        Vec n1(1);
        n1 << 1.7;
        const Point y = em_step(x, p, 0.04, {x, n1});
        REQUIRE(y.x[0] == Catch::Approx(0.3 + 0.2 * 1.7).margin(1e-14));
    }
    SECTION("constraints preserved over many steps") {
        const Potential p = make_vmf_sphere(sphere_pt({0, 0, 1}), 0.5);
        RngStream rng(21);
        Point x = sphere_pt({1, 0, 0});
        for (int i = 0; i < 10000; ++i) {
            x = em_step(x, p, 0.005, gaussian_tangent(x, rng));
            REQUIRE(point_residual(x) < 1e-12);
        }
    }
    SECTION("gradient cut-locus hit is jiggled through") {
        const Potential p = make_vmf_sphere(sphere_pt({0, 0, 1}), 0.5);
        const Point antipode = sphere_pt({0, 0, -1});
        TangentVector zero{antipode, Vec::Zero(3)};
        REQUIRE_NOTHROW(em_step(antipode, p, 0.005, zero));
        const Point a = em_step(antipode, p, 0.005, zero);
        const Point b = em_step(antipode, p, 0.005, zero);
        REQUIRE((a.x - b.x).norm() == 0.0);  // deterministic jiggle
    }
}

TEST_CASE("simulate grid and determinism") {
    const Potential p = make_vmf_sphere(sphere_pt({0, 0, 1}), 0.5);
    SdeConfig cfg;
    cfg.step_h = 0.005;
    cfg.horizon_T = 1.0;
    cfg.seed = 5;
    const PathSample a = simulate(sphere_pt({1, 0, 0}), p, cfg);
    REQUIRE(a.times.size() == 201);
    REQUIRE(a.times.front() == 0.0);
    REQUIRE(a.times.back() == Catch::Approx(1.0).margin(1e-12));
    const PathSample b = simulate(sphere_pt({1, 0, 0}), p, cfg);
    for (size_t i = 0; i < a.points.size(); ++i)
        REQUIRE((a.points[i].x - b.points[i].x).norm() == 0.0);
    cfg.seed = 6;
    const PathSample c = simulate(sphere_pt({1, 0, 0}), p, cfg);
    REQUIRE((a.points.back().x - c.points.back().x).norm() > 0.0);
}

TEST_CASE("step guard") {
    const Potential p = make_von_mises_circle(0, 1.0);
    SdeConfig cfg;
    cfg.step_h = 0.1;
    cfg.horizon_T = 1.0;
    REQUIRE_THROWS_AS(simulate(circle_pt(0), p, cfg), std::invalid_argument);
    cfg.allow_large_step = true;
    REQUIRE_NOTHROW(simulate(circle_pt(0), p, cfg));
    cfg.step_h = -0.01;
    REQUIRE_THROWS_AS(simulate(circle_pt(0), p, cfg), std::invalid_argument);
}

TEST_CASE("gaussian target endpoint moments") {
    // OU with A = I in 2d: endpoint mean -> mu, variance -> 1 per coordinate
    Vec mu(2);
    mu << 0.5, -0.25;
    const Potential p = make_gaussian_euclidean(mu, Mat::Identity(2, 2));
    SdeConfig cfg;
    cfg.step_h = 0.01;
    cfg.horizon_T = 10.0;
    const int n_paths = 10000;
    RngStream rng(22);
    std::vector<Vec> ends(n_paths);
    for (int i = 0; i < n_paths; ++i) {
        RngStream sub = rng.substream(i);
        ends[i] = simulate(euclid_pt({1.5, -0.25}), p, cfg, sub).points.back().x;
    }
    for (int d = 0; d < 2; ++d) {
        double m = 0, s2 = 0;
        for (const auto& e : ends) m += e[d];
        m /= n_paths;
        for (const auto& e : ends) s2 += (e[d] - m) * (e[d] - m);
        s2 /= (n_paths - 1);
        const double se_mean = std::sqrt(s2 / n_paths);
        REQUIRE(std::abs(m - mu[d]) < 3.0 * se_mean + 0.01);
        REQUIRE(std::abs(s2 - 1.0) < 0.05);
    }
}

TEST_CASE("ergodic mean") {
    SECTION("constant function gives mean 1, stderr 0") {
        const Potential p = make_von_mises_circle(0, 1.0);
        SdeConfig cfg;
        cfg.step_h = 0.01;
        cfg.horizon_T = 5.0;
        cfg.seed = 1;
        const PathSample path = simulate(circle_pt(0), p, cfg);
        const MeanStderr r = ergodic_mean([](const Point&) { return 1.0; }, path, 0.5);
        REQUIRE(r.mean == 1.0);
        REQUIRE(r.se == 0.0);
    }
    SECTION("empty post-burn-in window errors") {
        const Potential p = make_von_mises_circle(0, 1.0);
        SdeConfig cfg;
        cfg.step_h = 0.01;
        cfg.horizon_T = 1.0;
        cfg.seed = 1;
        const PathSample path = simulate(circle_pt(0), p, cfg);
        REQUIRE_THROWS_AS(ergodic_mean([](const Point&) { return 1.0; }, path, 2.0),
                          std::invalid_argument);
    }
    SECTION("von Mises circle means match the quadrature reference") {
        const Potential p = make_von_mises_circle(0, 1.0);
        SdeConfig cfg;
        cfg.step_h = 0.005;
        cfg.horizon_T = 400.0;
        cfg.seed = 23;
        const PathSample path = simulate(circle_pt(0.5), p, cfg);
        const double want_cos = circle_stationary_mean(p, [](double t) { return std::cos(t); });
        const MeanStderr got_cos =
            ergodic_mean([](const Point& q) { return std::cos(q.x[0]); }, path, 20.0);
        REQUIRE(std::abs(got_cos.mean - want_cos) < 3.0 * got_cos.se + 0.01);
        const MeanStderr got_sin =
            ergodic_mean([](const Point& q) { return std::sin(q.x[0]); }, path, 20.0);
        REQUIRE(std::abs(got_sin.mean - 0.0) < 3.0 * got_sin.se + 0.01);
    }
    SECTION("weak error shrinks when h is halved") {
        const Potential p = make_von_mises_circle(0, 1.0);
        const double want = circle_stationary_mean(p, [](double t) { return std::cos(t); });
        auto run = [&](double h) {
            SdeConfig cfg;
            cfg.step_h = h;
            cfg.horizon_T = 30000.0;
            cfg.seed = 24;
            const PathSample path = simulate(circle_pt(0), p, cfg);
            return ergodic_mean([](const Point& q) { return std::cos(q.x[0]); }, path, 50.0);
        };
        const MeanStderr coarse = run(0.05);
        const MeanStderr fine = run(0.025);
        const double err_c = std::abs(coarse.mean - want);
        const double err_f = std::abs(fine.mean - want);
        REQUIRE(err_f <= 0.5 * err_c + 3.0 * (coarse.se + fine.se));
    }
}

TEST_CASE("flow derivative by finite differences") {
    SECTION("euclidean matches the matrix exponential oracle") {
        Mat a = Mat::Zero(2, 2);
        a(0, 0) = 0.05;
        a(1, 1) = 0.02;
        const Potential p = make_gaussian_euclidean(Vec::Zero(2), a);
        SdeConfig cfg;
        cfg.step_h = 1e-3;
        cfg.horizon_T = 4.0;
        cfg.seed = 31;
        const Point x0 = euclid_pt({0.3, -0.2});
        Vec vc(2);
        vc << 0.6, 0.8;
        const FlowDerivative fd = flow_derivative_fd(x0, {x0, vc}, p, cfg, 1e-3);
        for (size_t i = 0; i < fd.times.size(); i += 50) {
            const double t = fd.times[i];
            // flow of the linear drift: |exp(-tA/2) v| (A diagonal)
            Vec want(2);
            want << std::exp(-t * a(0, 0) / 2.0) * vc[0], std::exp(-t * a(1, 1) / 2.0) * vc[1];
            REQUIRE(std::abs(fd.norms[i] - want.norm()) < 1e-6 * (1.0 + t));
            REQUIRE(fd.valid[i] == 1);
        }
    }
    SECTION("halving eps leaves euclidean estimates unchanged") {
        const Potential p = make_gaussian_euclidean(Vec::Zero(2), 0.1 * Mat::Identity(2, 2));
        SdeConfig cfg;
        cfg.step_h = 1e-3;
        cfg.horizon_T = 2.0;
        cfg.seed = 32;
        const Point x0 = euclid_pt({1, 1});
        Vec vc(2);
        vc << 1, 0;
        const FlowDerivative f1 = flow_derivative_fd(x0, {x0, vc}, p, cfg, 1e-3);
        const FlowDerivative f2 = flow_derivative_fd(x0, {x0, vc}, p, cfg, 5e-4);
        for (size_t i = 0; i < f1.times.size(); i += 100)
            REQUIRE(std::abs(f1.norms[i] - f2.norms[i]) < 1e-6 * (1.0 + f1.times[i]));
    }
    SECTION("eps outside the supported band is rejected") {
        const Potential p = make_gaussian_euclidean(Vec::Zero(2), Mat::Identity(2, 2));
        SdeConfig cfg;
        const Point x0 = euclid_pt({0, 0});
        Vec vc(2);
        vc << 1, 0;
        REQUIRE_THROWS_AS(flow_derivative_fd(x0, {x0, vc}, p, cfg, 1e-2), std::invalid_argument);
        REQUIRE_THROWS_AS(flow_derivative_fd(x0, {x0, vc}, p, cfg, 1e-7), std::invalid_argument);
    }
    SECTION("sphere vMF derivative decays at least at the certified rate") {
        const Potential p = make_vmf_sphere(sphere_pt({0, 0, 1}), 0.5);
        const double kappa = *a1_certificate(p).kappa;  // 0.25
        SdeConfig cfg;
        cfg.step_h = 0.005;
        cfg.horizon_T = 5.0;
        const Point x0 = sphere_pt({1, 0, 1});
        const int reps = 64;
        std::vector<double> mean_norm;
        std::vector<double> times;
        RngStream rng(33);
        for (int r = 0; r < reps; ++r) {
            RngStream sub = rng.substream(r);
            const TangentVector v = orthonormal_frame(x0).vector(0);
            const FlowDerivative fd = flow_derivative_fd(x0, v, p, cfg, 1e-3, sub);
            if (mean_norm.empty()) {
                mean_norm.assign(fd.norms.size(), 0.0);
                times = fd.times;
            }
            for (size_t i = 0; i < fd.norms.size(); ++i) mean_norm[i] += fd.norms[i] / reps;
        }
        std::vector<double> log_mean;
        for (double m : mean_norm) log_mean.push_back(std::log(m));
        const LineFit fit = linear_fit(times, log_mean);
        REQUIRE(fit.slope <= -kappa + 0.1);
    }
}
