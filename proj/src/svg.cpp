// Copyright 2026 The Skyglow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "skyglow/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <tuple>

#include "skyglow/error.hpp"

namespace skyglow {

namespace {

constexpr double kLeft = 80.0;
constexpr double kRight = 680.0;
constexpr double kTop = 60.0;
constexpr double kBottom = 380.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s(buf);
    return s == "-0.00" ? "0.00" : s;
}

std::string label_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string xml_escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

void text(std::ostringstream& out, double x, double y, const std::string& content, const char* anchor = "start",
          int size = 12) {
    out << "  <text x=\"" << fixed(x) << "\" y=\"" << fixed(y) << "\" font-family=\"sans-serif\" font-size=\"" << size
        << "\" text-anchor=\"" << anchor << "\">" << xml_escape(content) << "</text>\n";
}

void line(std::ostringstream& out, double x1, double y1, double x2, double y2) {
    out << "  <line x1=\"" << fixed(x1) << "\" y1=\"" << fixed(y1) << "\" x2=\"" << fixed(x2) << "\" y2=\""
        << fixed(y2) << "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
}

void check_finite(double v) {
    if (!std::isfinite(v)) {
        throw InputError("chart values must be finite");
    }
}

// Widens a degenerate range so that scaling stays defined.
std::pair<double, double> padded(double lo, double hi) {
    if (lo == hi) {
        return {lo - 1.0, hi + 1.0};
    }
    return {lo, hi};
}

void render_line(std::ostringstream& out, const ChartData& data) {
    if (data.lines.empty()) {
        throw InputError("line chart needs at least one series");
    }
    double x_lo = INFINITY;
    double x_hi = -INFINITY;
    double y_lo = INFINITY;
    double y_hi = -INFINITY;
    for (const auto& series : data.lines) {
        if (series.points.empty()) {
            throw InputError("line series '" + series.label + "' is empty");
        }
        for (const auto& [x, y] : series.points) {
            check_finite(x);
            check_finite(y);
            x_lo = std::min(x_lo, x);
            x_hi = std::max(x_hi, x);
            y_lo = std::min(y_lo, y);
            y_hi = std::max(y_hi, y);
        }
    }
    std::tie(x_lo, x_hi) = padded(x_lo, x_hi);
    std::tie(y_lo, y_hi) = padded(y_lo, y_hi);
    auto sx = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * (kRight - kLeft); };
    auto sy = [&](double y) { return kBottom - (y - y_lo) / (y_hi - y_lo) * (kBottom - kTop); };

    line(out, kLeft, kBottom, kRight, kBottom);
    line(out, kLeft, kTop, kLeft, kBottom);
    text(out, kLeft, kBottom + 20.0, label_number(x_lo), "middle");
    text(out, kRight, kBottom + 20.0, label_number(x_hi), "middle");
    text(out, kLeft - 8.0, kBottom, label_number(y_lo), "end");
    text(out, kLeft - 8.0, kTop + 4.0, label_number(y_hi), "end");

    for (std::size_t s = 0; s < data.lines.size(); ++s) {
        const auto& series = data.lines[s];
        const char* color = kPalette[s % std::size(kPalette)];
        out << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < series.points.size(); ++i) {
            out << (i == 0 ? "" : " ") << fixed(sx(series.points[i].first)) << ',' << fixed(sy(series.points[i].second));
        }
        out << "\"/>\n";
        const auto& last = series.points.back();
        text(out, sx(last.first) + 6.0, sy(last.second) + 4.0, series.label);
    }
}

void render_bar(std::ostringstream& out, const ChartData& data) {
    if (data.bars.empty()) {
        throw InputError("bar chart needs at least one bar");
    }
    double lo = 0.0;
    double hi = 0.0;
    for (const auto& bar : data.bars) {
        check_finite(bar.value);
        lo = std::min(lo, bar.value);
        hi = std::max(hi, bar.value);
    }
    if (lo == hi) {
        hi = lo + 1.0;
    }
    auto sy = [&](double y) { return kBottom - (y - lo) / (hi - lo) * (kBottom - kTop); };
    const double slot = (kRight - kLeft) / static_cast<double>(data.bars.size());
    const double width = slot * 0.8;

    line(out, kLeft, sy(0.0), kRight, sy(0.0));
    line(out, kLeft, kTop, kLeft, kBottom);
    text(out, kLeft - 8.0, kBottom, label_number(lo), "end");
    text(out, kLeft - 8.0, kTop + 4.0, label_number(hi), "end");

    for (std::size_t i = 0; i < data.bars.size(); ++i) {
        const auto& bar = data.bars[i];
        const double x = kLeft + slot * static_cast<double>(i) + (slot - width) / 2.0;
        const double top = std::min(sy(bar.value), sy(0.0));
        const double height = std::fabs(sy(bar.value) - sy(0.0));
        out << "  <rect x=\"" << fixed(x) << "\" y=\"" << fixed(top) << "\" width=\"" << fixed(width)
            << "\" height=\"" << fixed(height) << "\" fill=\"" << kPalette[0] << "\"/>\n";
        text(out, x + width / 2.0, kBottom + 18.0, bar.label, "middle", 10);
        text(out, x + width / 2.0, top - 4.0, label_number(bar.value), "middle", 10);
    }
}

} // namespace

std::string render_svg_chart(const ChartData& data, ChartKind kind) {
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kChartWidth << "\" height=\""
        << kChartHeight << "\" viewBox=\"0 0 " << kChartWidth << ' ' << kChartHeight << "\">\n";
    text(out, kChartWidth / 2.0, 30.0, data.title, "middle", 16);
    if (kind == ChartKind::line) {
        render_line(out, data);
    } else {
        render_bar(out, data);
    }
    out << "</svg>\n";
    return out.str();
}

void emit_svg_chart(const ChartData& data, ChartKind kind, const std::filesystem::path& path) {
    const std::string svg = render_svg_chart(data, kind);
    std::ofstream file(path, std::ios::binary);
    if (!file) {
        throw InputError("cannot write chart '" + path.string() + "'");
    }
    file << svg;
}

} // namespace skyglow
