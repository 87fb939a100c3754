#pragma once

// Self-contained SVG charts built from result tables.

#include "esn_rmt/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace esn_rmt::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;  // non-finite values break the line
    std::string color = "#1f77b4";
    bool dashed = false;
    bool markers_only = false;
};

struct LineChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = true;
    bool log_y = false;
    std::vector<Series> series;
    std::optional<double> marker_x;  // vertical reference line
    std::string marker_label;
};

struct Heatmap {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<std::string> x_ticks;
    std::vector<std::string> y_ticks;
    std::vector<std::vector<double>> values;  // [y][x]
    std::string value_label;
};

inline constexpr int kWidth = 760;
inline constexpr int kHeight = 500;
inline constexpr double kLeft = 80, kRight = 190, kTop = 50, kBottom = 60;

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

namespace detail {

struct Axis {
    double lo = 0.0, hi = 1.0;
    bool log = false;
    double a = 0.0, b = 1.0;  // pixel range

    double map(double v) const {
        const double t = log ? (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo)) : (v - lo) / (hi - lo);
        return a + t * (b - a);
    }

    std::vector<double> ticks() const {
        std::vector<double> t;
        if (log) {
            // Decades when there are enough of them, else 1-2-5 steps.
            for (const auto& mantissas : {std::vector<double>{1}, std::vector<double>{1, 2, 5}}) {
                t.clear();
                for (double e = std::floor(std::log10(lo)); e <= std::ceil(std::log10(hi)); e += 1.0)
                    for (double m : mantissas) {
                        const double v = m * std::pow(10.0, e);
                        if (v >= lo * (1 - 1e-12) && v <= hi * (1 + 1e-12)) t.push_back(v);
                    }
                if (t.size() >= 3) break;
            }
            if (t.size() < 2) t = {lo, hi};
        } else {
            for (int i = 0; i <= 5; ++i) t.push_back(lo + (hi - lo) * i / 5.0);
        }
        return t;
    }
};

inline Axis fit_axis(std::vector<double> v, bool log, double a, double b) {
    Axis ax;
    ax.log = log;
    ax.a = a;
    ax.b = b;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double x : v) {
        if (!std::isfinite(x) || (log && x <= 0.0)) continue;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (!std::isfinite(lo)) lo = log ? 1.0 : 0.0, hi = log ? 10.0 : 1.0;
    if (hi == lo) {
        if (log) lo /= 2.0, hi *= 2.0;
        else lo -= 0.5, hi += 0.5;
    } else if (!log) {
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
    ax.lo = lo;
    ax.hi = hi;
    return ax;
}

inline void header(std::ostringstream& os, const std::string& title) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
       << "</text>\n";
}

inline void axis_labels(std::ostringstream& os, const std::string& x, const std::string& y) {
    const double cx = kLeft + (kWidth - kLeft - kRight) / 2.0;
    const double cy = kTop + (kHeight - kTop - kBottom) / 2.0;
    os << "<text x=\"" << px(cx) << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">" << escape(x)
       << "</text>\n";
    os << "<text x=\"18\" y=\"" << px(cy) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << px(cy)
       << ")\">" << escape(y) << "</text>\n";
}

}  // namespace detail

inline std::string render(const LineChart& c) {
    std::vector<double> xs, ys;
    for (const auto& s : c.series) {
        xs.insert(xs.end(), s.x.begin(), s.x.end());
        ys.insert(ys.end(), s.y.begin(), s.y.end());
    }
    if (c.marker_x) xs.push_back(*c.marker_x);
    const auto xa = detail::fit_axis(xs, c.log_x, kLeft, kWidth - kRight);
    const auto ya = detail::fit_axis(ys, c.log_y, kHeight - kBottom, kTop);

    std::ostringstream os;
    detail::header(os, c.title);
    os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kWidth - kLeft - kRight << "\" height=\""
       << kHeight - kTop - kBottom << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double t : xa.ticks()) {
        const double x = xa.map(t);
        os << "<line x1=\"" << px(x) << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << px(x) << "\" y2=\""
           << kTop << "\" stroke=\"#e0e0e0\"/>\n";
        os << "<text x=\"" << px(x) << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"middle\">" << num(t)
           << "</text>\n";
    }
    for (double t : ya.ticks()) {
        const double y = ya.map(t);
        os << "<line x1=\"" << kLeft << "\" y1=\"" << px(y) << "\" x2=\"" << kWidth - kRight << "\" y2=\"" << px(y)
           << "\" stroke=\"#e0e0e0\"/>\n";
        os << "<text x=\"" << kLeft - 6 << "\" y=\"" << px(y + 4) << "\" text-anchor=\"end\">" << num(t)
           << "</text>\n";
    }
    detail::axis_labels(os, c.x_label, c.y_label);

    auto inside = [&](double x, double y) {
        return std::isfinite(x) && std::isfinite(y) && (!c.log_x || x > 0) && (!c.log_y || y > 0);
    };
    for (const auto& s : c.series) {
        if (s.markers_only) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!inside(s.x[i], s.y[i])) continue;
                os << "<circle cx=\"" << px(xa.map(s.x[i])) << "\" cy=\"" << px(ya.map(s.y[i])) << "\" r=\"3\" fill=\""
                   << s.color << "\"/>\n";
            }
            continue;
        }
        std::string d;
        bool pen_down = false;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!inside(s.x[i], s.y[i])) {
                pen_down = false;
                continue;
            }
            d += (pen_down ? " L" : " M") + px(xa.map(s.x[i])) + ' ' + px(ya.map(s.y[i]));
            pen_down = true;
        }
        os << "<path d=\"" << d.substr(d.empty() ? 0 : 1) << "\" fill=\"none\" stroke=\"" << s.color
           << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
    }
    if (c.marker_x && inside(*c.marker_x, ya.lo)) {
        const double x = xa.map(*c.marker_x);
        os << "<line class=\"marker\" x1=\"" << px(x) << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << px(x)
           << "\" y2=\"" << kTop << "\" stroke=\"black\" stroke-dasharray=\"3 3\"/>\n";
        os << "<text x=\"" << px(x + 4) << "\" y=\"" << kTop + 14 << "\">" << escape(c.marker_label) << "</text>\n";
    }

    double ly = kTop + 10;
    for (const auto& s : c.series) {
        const double lx = kWidth - kRight + 15;
        if (s.markers_only)
            os << "<circle cx=\"" << px(lx + 12) << "\" cy=\"" << px(ly) << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
        else
            os << "<line x1=\"" << px(lx) << "\" y1=\"" << px(ly) << "\" x2=\"" << px(lx + 24) << "\" y2=\"" << px(ly)
               << "\" stroke=\"" << s.color << "\" stroke-width=\"2\""
               << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
        os << "<text x=\"" << px(lx + 30) << "\" y=\"" << px(ly + 4) << "\">" << escape(s.label) << "</text>\n";
        ly += 18;
    }
    os << "</svg>\n";
    return os.str();
}

/// Diverging blue (negative) / white / red (positive).
inline std::string diverging_color(double v, double scale) {
    const double t = scale > 0.0 ? std::clamp(v / scale, -1.0, 1.0) : 0.0;
    const auto channel = [](double c) { return static_cast<int>(std::lround(255.0 * c)); };
    int r, g, b;
    if (t >= 0.0) {
        r = 255;
        g = b = channel(1.0 - t);
    } else {
        b = 255;
        r = g = channel(1.0 + t);
    }
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

inline std::string render(const Heatmap& h) {
    std::ostringstream os;
    detail::header(os, h.title);
    const std::size_t nx = h.x_ticks.size(), ny = h.y_ticks.size();
    const double w = (kWidth - kLeft - kRight) / static_cast<double>(std::max<std::size_t>(nx, 1));
    const double ht = (kHeight - kTop - kBottom) / static_cast<double>(std::max<std::size_t>(ny, 1));
    double scale = 0.0;
    for (const auto& row : h.values)
        for (double v : row)
            if (std::isfinite(v)) scale = std::max(scale, std::abs(v));

    for (std::size_t j = 0; j < ny; ++j) {
        // first y tick at the bottom
        const double y = kHeight - kBottom - static_cast<double>(j + 1) * ht;
        for (std::size_t i = 0; i < nx; ++i) {
            const double v = h.values[j][i];
            const double x = kLeft + static_cast<double>(i) * w;
            os << "<rect x=\"" << px(x) << "\" y=\"" << px(y) << "\" width=\"" << px(w) << "\" height=\"" << px(ht)
               << "\" fill=\"" << (std::isfinite(v) ? diverging_color(v, scale) : "#999999") << "\" stroke=\"#cccccc\"/>\n";
            os << "<text x=\"" << px(x + w / 2) << "\" y=\"" << px(y + ht / 2 + 4)
               << "\" text-anchor=\"middle\" font-size=\"10\">" << (std::isfinite(v) ? num(std::round(v * 1000) / 1000) : "div")
               << "</text>\n";
        }
        os << "<text x=\"" << kLeft - 6 << "\" y=\"" << px(y + ht / 2 + 4) << "\" text-anchor=\"end\">"
           << escape(h.y_ticks[j]) << "</text>\n";
    }
    for (std::size_t i = 0; i < nx; ++i)
        os << "<text x=\"" << px(kLeft + (static_cast<double>(i) + 0.5) * w) << "\" y=\"" << kHeight - kBottom + 16
           << "\" text-anchor=\"middle\">" << escape(h.x_ticks[i]) << "</text>\n";
    detail::axis_labels(os, h.x_label, h.y_label);

    const double lx = kWidth - kRight + 30, top = kTop, bar_h = kHeight - kTop - kBottom;
    for (int k = 0; k < 20; ++k) {
        const double v = scale * (1.0 - 2.0 * (k + 0.5) / 20.0);
        os << "<rect x=\"" << px(lx) << "\" y=\"" << px(top + k * bar_h / 20.0) << "\" width=\"18\" height=\""
           << px(bar_h / 20.0 + 0.5) << "\" fill=\"" << diverging_color(v, scale) << "\"/>\n";
    }
    os << "<text x=\"" << px(lx + 24) << "\" y=\"" << px(top + 10) << "\">" << num(scale) << "</text>\n";
    os << "<text x=\"" << px(lx + 24) << "\" y=\"" << px(top + bar_h / 2 + 4) << "\">0</text>\n";
    os << "<text x=\"" << px(lx + 24) << "\" y=\"" << px(top + bar_h) << "\">" << num(-scale) << "</text>\n";
    os << "<text x=\"" << px(lx) << "\" y=\"" << px(top + bar_h + 30) << "\">" << escape(h.value_label) << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

// ---------------------------------------------------------------------------

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    return colors[i % 6];
}

inline double cell(const Table& t, const std::vector<std::string>& row, const std::string& col) {
    const auto& s = row[t.column(col)];
    if (s.empty()) return NAN;
    return std::stod(s);
}

/// Chart for a results table: total risk against gamma or lambda, or the ridge - ESN heatmap.
inline std::string plot_table(const Table& t) {
    const ExperimentKind kind = detect_kind(t);
    if (kind == ExperimentKind::MemoryGrid) {
        std::vector<std::string> Ns, rhos;
        std::map<std::pair<std::string, std::string>, double> val;
        for (const auto& r : t.rows) {
            const auto& N = r[t.column("N")];
            const auto& rho = r[t.column("rho")];
            if (std::find(Ns.begin(), Ns.end(), N) == Ns.end()) Ns.push_back(N);
            if (std::find(rhos.begin(), rhos.end(), rho) == rhos.end()) rhos.push_back(rho);
            val[{N, rho}] = cell(t, r, "diff_total");
        }
        Heatmap h;
        h.title = "Ridge minus ESN test error";
        h.x_label = "training samples N";
        h.y_label = "teacher memory rho";
        h.x_ticks = Ns;
        h.value_label = "ridge - ESN";
        for (const auto& rho : rhos) {
            h.y_ticks.push_back(num(std::stod(rho)));
            auto& row = h.values.emplace_back();
            for (const auto& N : Ns) {
                const auto it = val.find({N, rho});
                row.push_back(it == val.end() ? NAN : it->second);
            }
        }
        return render(h);
    }

    const bool sweep_lambda = kind == ExperimentKind::LambdaSweep;
    const std::string xcol = sweep_lambda ? "lambda" : "gamma";
    const bool with_mc = t.has_column("empirical");
    std::vector<std::string> keys;
    std::map<std::string, Series> lines, dots;
    for (const auto& r : t.rows) {
        std::string key = r[t.column("model")];
        if (!sweep_lambda) key += " rho=" + num(std::stod(r[t.column("rho")]));
        if (!lines.count(key)) {
            keys.push_back(key);
            const std::size_t idx = keys.size() - 1;
            lines[key] = Series{key, {}, {}, palette(idx), r[t.column("model")] == "esn", false};
            dots[key] = Series{key + " (simulated)", {}, {}, palette(idx), false, true};
        }
        const double x = cell(t, r, xcol);
        lines[key].x.push_back(x);
        lines[key].y.push_back(cell(t, r, "diverged") != 0.0 ? NAN : cell(t, r, "total"));
        if (with_mc) {
            dots[key].x.push_back(x);
            dots[key].y.push_back(cell(t, r, "empirical"));
        }
    }
    LineChart c;
    c.log_x = true;
    c.log_y = !sweep_lambda;
    c.y_label = "test error";
    for (const auto& k : keys) {
        c.series.push_back(lines[k]);
        if (with_mc) c.series.push_back(dots[k]);
    }
    if (sweep_lambda) {
        c.title = "Test error versus regularization";
        c.x_label = "lambda";
        if (!t.rows.empty()) {
            const double ls = cell(t, t.rows.front(), "lambda_star");
            if (std::isfinite(ls)) {
                c.marker_x = ls;
                c.marker_label = "lambda* = " + num(ls);
            }
        }
    } else {
        c.title = "Test error versus T / N";
        c.x_label = "gamma = T / N";
    }
    return render(c);
}

}  // namespace esn_rmt::svg
