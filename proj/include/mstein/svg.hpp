#pragma once
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mstein {

namespace detail {

// Tick spacing from the 1-2-5 ladder, aiming for about `target` ticks.
inline double tick_step(double span, int target) {
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double r = raw / mag;
    const double s = r < 1.5 ? 1.0 : r < 3.5 ? 2.0 : r < 7.5 ? 5.0 : 10.0;
    return s * mag;
}

inline std::string svg_num(double v) {
    char b[40];
    std::snprintf(b, sizeof b, "%.2f", v);
    return b;
}

inline std::string tick_label(double v) {
    if (v == 0.0) v = 0.0;  // normalize -0
    char b[40];
    std::snprintf(b, sizeof b, "%g", v);
    return b;
}

}  // namespace detail

struct SvgSeries {
    std::vector<double> x, y;
    std::string color = "#1f77b4";
    std::string label;
    bool dashed = false;
};

// Minimal plot writer: polylines over an axis box with ticks and labels.
// Non-finite samples split a series into separate segments. Output bytes are
// a pure function of the data, so identical runs produce identical files.
struct SvgPlot {
    int width = 720;
    int height = 480;
    std::string title, xlabel, ylabel;
    std::vector<SvgSeries> series;

    void add(std::vector<double> xs, std::vector<double> ys, std::string color,
             std::string label, bool dashed = false) {
        if (xs.size() != ys.size())
            throw std::invalid_argument("svg: series coordinate lengths disagree");
        series.push_back({std::move(xs), std::move(ys), std::move(color), std::move(label),
                          dashed});
    }

    std::string render() const {
        double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
        bool any = false;
        for (const auto& s : series)
            for (size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                if (!any) {
                    x0 = x1 = s.x[i];
                    y0 = y1 = s.y[i];
                    any = true;
                } else {
                    x0 = std::min(x0, s.x[i]);
                    x1 = std::max(x1, s.x[i]);
                    y0 = std::min(y0, s.y[i]);
                    y1 = std::max(y1, s.y[i]);
                }
            }
        if (!any) throw std::invalid_argument("svg: nothing finite to plot");
        if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
        if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
        const double padx = 0.04 * (x1 - x0), pady = 0.05 * (y1 - y0);
        const double lox = x0 - padx, hix = x1 + padx, loy = y0 - pady, hiy = y1 + pady;

        const double L = 64, R = 16, T = 36, B = 48;
        const double pw = width - L - R, ph = height - T - B;
        auto mx = [&](double x) { return L + (x - lox) / (hix - lox) * pw; };
        auto my = [&](double y) { return height - B - (y - loy) / (hiy - loy) * ph; };

        std::string out;
        out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
               "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " +
               std::to_string(width) + " " + std::to_string(height) + "\">\n";
        out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        out += "<rect x=\"" + detail::svg_num(L) + "\" y=\"" + detail::svg_num(T) +
               "\" width=\"" + detail::svg_num(pw) + "\" height=\"" + detail::svg_num(ph) +
               "\" fill=\"none\" stroke=\"#444\"/>\n";

        const double sx = detail::tick_step(hix - lox, 6);
        for (double t = std::ceil(lox / sx) * sx; t <= hix + 1e-9 * sx; t += sx) {
            const double px = mx(t);
            out += "<line x1=\"" + detail::svg_num(px) + "\" y1=\"" +
                   detail::svg_num(height - B) + "\" x2=\"" + detail::svg_num(px) + "\" y2=\"" +
                   detail::svg_num(height - B + 5) + "\" stroke=\"#444\"/>\n";
            out += "<text x=\"" + detail::svg_num(px) + "\" y=\"" +
                   detail::svg_num(height - B + 18) +
                   "\" font-size=\"11\" text-anchor=\"middle\">" + detail::tick_label(t) +
                   "</text>\n";
        }
        const double sy = detail::tick_step(hiy - loy, 6);
        for (double t = std::ceil(loy / sy) * sy; t <= hiy + 1e-9 * sy; t += sy) {
            const double py = my(t);
            out += "<line x1=\"" + detail::svg_num(L - 5) + "\" y1=\"" + detail::svg_num(py) +
                   "\" x2=\"" + detail::svg_num(L) + "\" y2=\"" + detail::svg_num(py) +
                   "\" stroke=\"#444\"/>\n";
            out += "<text x=\"" + detail::svg_num(L - 8) + "\" y=\"" + detail::svg_num(py + 4) +
                   "\" font-size=\"11\" text-anchor=\"end\">" + detail::tick_label(t) +
                   "</text>\n";
        }

        for (const auto& s : series) {
            std::string pts;
            auto flush = [&] {
                if (pts.empty()) return;
                out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + s.color +
                       "\" stroke-width=\"1.5\"" +
                       (s.dashed ? std::string(" stroke-dasharray=\"6 4\"") : std::string()) +
                       "/>\n";
                pts.clear();
            };
            for (size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
                    flush();
                    continue;
                }
                if (!pts.empty()) pts += ' ';
                pts += detail::svg_num(mx(s.x[i])) + "," + detail::svg_num(my(s.y[i]));
            }
            flush();
        }

        if (!title.empty())
            out += "<text x=\"" + detail::svg_num(L + pw / 2) + "\" y=\"22\" font-size=\"14\" "
                   "text-anchor=\"middle\">" + title + "</text>\n";
        if (!xlabel.empty())
            out += "<text x=\"" + detail::svg_num(L + pw / 2) + "\" y=\"" +
                   detail::svg_num(height - 10) +
                   "\" font-size=\"12\" text-anchor=\"middle\">" + xlabel + "</text>\n";
        if (!ylabel.empty())
            out += "<text x=\"14\" y=\"" + detail::svg_num(T + ph / 2) +
                   "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
                   detail::svg_num(T + ph / 2) + ")\">" + ylabel + "</text>\n";

        double ly = T + 16;
        for (const auto& s : series) {
            if (s.label.empty()) continue;
            const double lx = L + pw - 150;
            out += "<line x1=\"" + detail::svg_num(lx) + "\" y1=\"" + detail::svg_num(ly - 4) +
                   "\" x2=\"" + detail::svg_num(lx + 24) + "\" y2=\"" + detail::svg_num(ly - 4) +
                   "\" stroke=\"" + s.color + "\" stroke-width=\"1.5\"" +
                   (s.dashed ? std::string(" stroke-dasharray=\"6 4\"") : std::string()) +
                   "/>\n";
            out += "<text x=\"" + detail::svg_num(lx + 30) + "\" y=\"" + detail::svg_num(ly) +
                   "\" font-size=\"11\">" + s.label + "</text>\n";
            ly += 16;
        }
        out += "</svg>\n";
        return out;
    }

    void save(const std::string& path) const {
        const std::string text = render();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("svg: cannot open " + path);
        out << text;
        if (!out) throw std::runtime_error("svg: write failed for " + path);
    }
};

}  // namespace mstein
