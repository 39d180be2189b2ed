// Copyright 2026 The tmsent Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tmsent::svg {

struct Series {
    std::string name;
    std::vector<double> y;
    /// Optional error bar ends; empty for none.
    std::vector<double> lo;
    std::vector<double> hi;
};

namespace detail {

inline constexpr double kWidth = 720;
inline constexpr double kHeight = 420;
inline constexpr double kLeft = 70;
inline constexpr double kRight = 20;
inline constexpr double kTop = 40;
inline constexpr double kBottom = 80;
inline const char *const kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

inline std::string escape(const std::string &s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&':
                out += "&amp;";
                break;
            case '<':
                out += "&lt;";
                break;
            case '>':
                out += "&gt;";
                break;
            case '"':
                out += "&quot;";
                break;
            default:
                out += c;
        }
    }
    return out;
}

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

/// Linear axis mapping [lo, hi] onto pixel range [a, b].
struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    double a = 0.0;
    double b = 1.0;

    double operator()(double v) const {
        return a + (v - lo) / (hi - lo) * (b - a);
    }
    std::vector<double> ticks(int target = 5) const {
        double span = hi - lo;
        double raw = span / target;
        double mag = std::pow(10.0, std::floor(std::log10(raw)));
        double step = mag;
        for (double m : {1.0, 2.0, 5.0, 10.0}) {
            if (m * mag >= raw) {
                step = m * mag;
                break;
            }
        }
        std::vector<double> out;
        for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) {
            out.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
        }
        return out;
    }
};

inline Axis padded(double lo, double hi, double a, double b) {
    if (!(hi > lo)) {
        hi = lo + 1.0;
    }
    return Axis{lo, hi, a, b};
}

inline void open(std::ostringstream &os, const std::string &title, const std::string &comment) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    if (!comment.empty()) {
        std::string c = comment;
        for (std::size_t p = c.find("--"); p != std::string::npos; p = c.find("--")) {
            c.replace(p, 2, "- -");
        }
        os << "<!--\n" << c << "-->\n";
    }
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
       << "</text>\n";
}

inline void frame(std::ostringstream &os, const Axis &y, const std::string &x_label, const std::string &y_label) {
    const double x0 = kLeft;
    const double x1 = kWidth - kRight;
    os << "<line x1=\"" << x0 << "\" y1=\"" << y.a << "\" x2=\"" << x1 << "\" y2=\"" << y.a
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << x0 << "\" y1=\"" << y.a << "\" x2=\"" << x0 << "\" y2=\"" << y.b
       << "\" stroke=\"black\"/>\n";
    for (double t : y.ticks()) {
        os << "<line x1=\"" << x0 - 4 << "\" y1=\"" << num(y(t)) << "\" x2=\"" << x0 << "\" y2=\"" << num(y(t))
           << "\" stroke=\"black\"/>";
        os << "<text x=\"" << x0 - 6 << "\" y=\"" << num(y(t) + 4) << "\" text-anchor=\"end\">" << tick_label(t)
           << "</text>\n";
    }
    os << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 8 << "\" text-anchor=\"middle\">"
       << escape(x_label) << "</text>\n";
    os << "<text transform=\"translate(16," << (y.a + y.b) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
       << escape(y_label) << "</text>\n";
}

inline void error_bar(std::ostringstream &os, double x, double y_lo, double y_hi, const char *color) {
    os << "<line x1=\"" << num(x) << "\" y1=\"" << num(y_lo) << "\" x2=\"" << num(x) << "\" y2=\"" << num(y_hi)
       << "\" stroke=\"" << color << "\"/>";
    for (double y : {y_lo, y_hi}) {
        os << "<line x1=\"" << num(x - 3) << "\" y1=\"" << num(y) << "\" x2=\"" << num(x + 3) << "\" y2=\""
           << num(y) << "\" stroke=\"" << color << "\"/>";
    }
    os << '\n';
}

}  // namespace detail

/// Vertical bars with optional [lo, hi] error bars.
inline std::string bar_chart(const std::string &title, const std::vector<std::string> &labels,
                             const std::vector<double> &values, const std::vector<double> &lo,
                             const std::vector<double> &hi, const std::string &x_label, const std::string &y_label,
                             const std::string &comment = "") {
    using namespace detail;
    if (labels.size() != values.size() || (!lo.empty() && lo.size() != values.size()) || lo.size() != hi.size()) {
        throw std::invalid_argument("svg::bar_chart: mismatched series lengths");
    }
    double top = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        top = std::max(top, hi.empty() ? values[i] : hi[i]);
    }
    Axis y = padded(0.0, top * 1.05, kHeight - kBottom, kTop);
    std::ostringstream os;
    open(os, title, comment);
    frame(os, y, x_label, y_label);
    const double slot = (kWidth - kLeft - kRight) / std::max<std::size_t>(1, values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        double cx = kLeft + slot * (i + 0.5);
        double w = slot * 0.7;
        os << "<rect x=\"" << num(cx - w / 2) << "\" y=\"" << num(y(values[i])) << "\" width=\"" << num(w)
           << "\" height=\"" << num(y(0.0) - y(values[i])) << "\" fill=\"" << kColors[0] << "\"/>";
        if (!lo.empty()) {
            error_bar(os, cx, y(lo[i]), y(hi[i]), "black");
        }
        os << "<text transform=\"translate(" << num(cx + 3) << "," << num(y.a + 8) << ") rotate(60)\">"
           << escape(labels[i]) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

/// Histogram of values with fixed bin width starting at floor(min / width).
inline std::string histogram(const std::string &title, const std::vector<double> &values, double bin_width,
                             const std::string &x_label, const std::string &comment = "") {
    using namespace detail;
    if (values.empty() || !(bin_width > 0.0)) {
        throw std::invalid_argument("svg::histogram: need values and a positive bin width");
    }
    double lo = std::floor(*std::min_element(values.begin(), values.end()) / bin_width) * bin_width;
    double hi_v = *std::max_element(values.begin(), values.end());
    int nbins = static_cast<int>(std::floor((hi_v - lo) / bin_width)) + 1;
    std::vector<long> counts(nbins, 0);
    for (double v : values) {
        counts[std::min(nbins - 1, static_cast<int>(std::floor((v - lo) / bin_width)))]++;
    }
    long top = *std::max_element(counts.begin(), counts.end());
    Axis y = padded(0.0, top * 1.05, kHeight - kBottom, kTop);
    Axis x = padded(lo, lo + nbins * bin_width, kLeft, kWidth - kRight);
    std::ostringstream os;
    open(os, title, comment);
    frame(os, y, x_label, "count");
    for (int b = 0; b < nbins; ++b) {
        double x0 = x(lo + b * bin_width);
        double x1 = x(lo + (b + 1) * bin_width);
        os << "<rect x=\"" << num(x0) << "\" y=\"" << num(y(counts[b])) << "\" width=\"" << num(x1 - x0)
           << "\" height=\"" << num(y(0.0) - y(counts[b])) << "\" fill=\"" << kColors[0]
           << "\" stroke=\"white\" stroke-width=\"0.5\"/>\n";
    }
    for (double t : x.ticks(8)) {
        os << "<text x=\"" << num(x(t)) << "\" y=\"" << num(y.a + 16) << "\" text-anchor=\"middle\">"
           << tick_label(t) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

/// Line chart with markers and optional error bars per series.
inline std::string line_chart(const std::string &title, const std::vector<double> &x_values,
                              const std::vector<Series> &series, const std::string &x_label,
                              const std::string &y_label, const std::string &comment = "") {
    using namespace detail;
    if (x_values.empty()) {
        throw std::invalid_argument("svg::line_chart: empty x range");
    }
    double y_lo = 0.0;
    double y_hi = 0.0;
    for (const auto &s : series) {
        if (s.y.size() != x_values.size()) {
            throw std::invalid_argument("svg::line_chart: series length mismatch");
        }
        for (std::size_t i = 0; i < s.y.size(); ++i) {
            y_lo = std::min(y_lo, s.lo.empty() ? s.y[i] : s.lo[i]);
            y_hi = std::max(y_hi, s.hi.empty() ? s.y[i] : s.hi[i]);
        }
    }
    Axis y = padded(y_lo, y_hi * 1.05, kHeight - kBottom, kTop);
    double pad = x_values.size() > 1 ? 0.03 * (x_values.back() - x_values.front()) : 0.5;
    Axis x = padded(x_values.front() - pad, x_values.back() + pad, kLeft, kWidth - kRight - 110);
    std::ostringstream os;
    open(os, title, comment);
    frame(os, y, x_label, y_label);
    for (double t : x.ticks(8)) {
        os << "<text x=\"" << num(x(t)) << "\" y=\"" << num(y.a + 16) << "\" text-anchor=\"middle\">"
           << tick_label(t) << "</text>\n";
    }
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto &s = series[k];
        const char *color = kColors[k % 6];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
        for (std::size_t i = 0; i < s.y.size(); ++i) {
            os << num(x(x_values[i])) << ',' << num(y(s.y[i])) << ' ';
        }
        os << "\"/>\n";
        for (std::size_t i = 0; i < s.y.size(); ++i) {
            os << "<circle cx=\"" << num(x(x_values[i])) << "\" cy=\"" << num(y(s.y[i])) << "\" r=\"3\" fill=\""
               << color << "\"/>";
            if (!s.lo.empty()) {
                error_bar(os, x(x_values[i]), y(s.lo[i]), y(s.hi[i]), color);
            }
        }
        double ly = kTop + 16 * k;
        os << "<rect x=\"" << kWidth - kRight - 100 << "\" y=\"" << ly << "\" width=\"10\" height=\"10\" fill=\""
           << color << "\"/><text x=\"" << kWidth - kRight - 85 << "\" y=\"" << ly + 9 << "\">" << escape(s.name)
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace tmsent::svg
