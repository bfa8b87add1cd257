#pragma once
#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mstein {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MeanStderr {
    double mean = 0.0;
    double se = 0.0;
};

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

inline double clamp1(double t) { return std::min(1.0, std::max(-1.0, t)); }

// Wrap an angle into (-pi, pi].
inline double wrap_angle(double t) {
    double w = std::remainder(t, 2.0 * M_PI);
    if (w <= -M_PI) w += 2.0 * M_PI;
    return w;
}

// Composite Simpson rule on [a,b] with n intervals (n rounded up to even).
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (n < 2) n = 2;
    if (n % 2) ++n;
    const double dx = (b - a) / n;
    double odd = 0.0, even = 0.0;
    for (int i = 1; i < n; i += 2) odd += f(a + i * dx);
    for (int i = 2; i < n; i += 2) even += f(a + i * dx);
    return dx / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even);
}

// Cumulative integral of uniformly spaced samples y_0..y_n (spacing dx).
// Each panel uses the closed 4-point Newton-Cotes rule, O(dx^4) globally.
inline std::vector<double> cumulative_integral(const std::vector<double>& y, double dx) {
    const int n = static_cast<int>(y.size()) - 1;
    if (n < 3) throw std::invalid_argument("cumulative_integral: need >= 4 samples");
    std::vector<double> c(y.size(), 0.0);
    for (int j = 1; j <= n; ++j) {
        double panel;
        if (j == 1)
            panel = dx / 24.0 * (9.0 * y[0] + 19.0 * y[1] - 5.0 * y[2] + y[3]);
        else if (j == n)
            panel = dx / 24.0 * (9.0 * y[n] + 19.0 * y[n - 1] - 5.0 * y[n - 2] + y[n - 3]);
        else
            panel = dx / 24.0 * (-y[j - 2] + 13.0 * y[j - 1] + 13.0 * y[j] - y[j + 1]);
        c[j] = c[j - 1] + panel;
    }
    return c;
}

inline LineFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("linear_fit: need matching series of length >= 2");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    if (std::abs(den) < 1e-300) throw std::invalid_argument("linear_fit: degenerate abscissa");
    LineFit f;
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

// p-quantile with linear interpolation; sorts a copy.
inline double quantile(std::vector<double> v, double p) {
    if (v.empty()) throw std::invalid_argument("quantile: empty sample");
    std::sort(v.begin(), v.end());
    const double pos = p * (v.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, v.size() - 1);
    const double w = pos - lo;
    return (1.0 - w) * v[lo] + w * v[hi];
}

// Mean and batch-means standard error over equal contiguous batches
// (tail remainder dropped from the batching, not from the mean).
inline MeanStderr batch_means(const std::vector<double>& v, int n_batches = 16) {
    if (v.empty()) throw std::invalid_argument("batch_means: empty sample");
    MeanStderr r;
    for (double t : v) r.mean += t;
    r.mean /= static_cast<double>(v.size());
    const size_t bs = v.size() / n_batches;
    if (bs == 0) {
        r.se = std::numeric_limits<double>::infinity();
        return r;
    }
    std::vector<double> bm(n_batches, 0.0);
    for (int b = 0; b < n_batches; ++b) {
        for (size_t i = 0; i < bs; ++i) bm[b] += v[b * bs + i];
        bm[b] /= static_cast<double>(bs);
    }
    double mu = 0;
    for (double t : bm) mu += t;
    mu /= n_batches;
    double s2 = 0;
    for (double t : bm) s2 += (t - mu) * (t - mu);
    s2 /= (n_batches - 1);
    r.se = std::sqrt(s2 / n_batches);
    return r;
}

inline int thread_count() {
    if (const char* e = std::getenv("MSTEIN_THREADS")) {
        int n = std::atoi(e);
        if (n > 0) return n;
    }
    unsigned n = std::thread::hardware_concurrency();
    return n ? static_cast<int>(n) : 1;
}

// Runs fn(i) for i in [0,n). fn must only write to its own index slot;
// results are then identical for every thread count.
inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
    const int nt = std::min<std::int64_t>(thread_count(), n);
    if (nt <= 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex err_mx;
    for (int t = 0; t < nt; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const std::int64_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> g(err_mx);
                    if (!err) err = std::current_exception();
                    return;
                }
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

// Shortest printing that round-trips; used by every CSV/JSON writer so that
// outputs are byte-identical for identical inputs.
inline std::string fmt_num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

}  // namespace mstein
