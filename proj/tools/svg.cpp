#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace codistill::cli {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 400;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 60;

const char* kPalette[] = {"#4878d0", "#ee854a", "#6acc64", "#d65f5f", "#956cb4", "#8c613c"};

std::string fmt(double v) {
    char buf[64];
    if (std::abs(v - std::nearbyint(v)) < 1e-9 && std::abs(v) < 1e15) {
        std::snprintf(buf, sizeof buf, "%.0f", v);
    } else {
        std::snprintf(buf, sizeof buf, "%.2f", v);
    }
    return buf;
}

std::string coord(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

void open_svg(std::ostringstream& os, const std::string& title) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
       << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    os << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
       << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
}

void axes(std::ostringstream& os) {
    int x0 = kMarginLeft, y0 = kHeight - kMarginBottom, x1 = kWidth - kMarginRight, y1 = kMarginTop;
    os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1
       << "\" stroke=\"black\"/>\n";
}

}  // namespace

std::string svg_bar_chart(const std::string& title, const std::string& y_label,
                          const std::vector<BarDatum>& bars) {
    std::ostringstream os;
    open_svg(os, title);
    axes(os);
    os << "<text x=\"18\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" "
       << "font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 18 "
       << kHeight / 2 << ")\">" << y_label << "</text>\n";

    double max_v = 1.0;
    for (const BarDatum& b : bars) max_v = std::max(max_v, b.value);

    double plot_w = kWidth - kMarginLeft - kMarginRight;
    double plot_h = kHeight - kMarginTop - kMarginBottom;
    double slot = plot_w / static_cast<double>(bars.empty() ? 1 : bars.size());
    double bar_w = slot * 0.6;

    for (std::size_t i = 0; i < bars.size(); ++i) {
        double h = plot_h * bars[i].value / max_v;
        double x = kMarginLeft + slot * static_cast<double>(i) + (slot - bar_w) / 2.0;
        double y = kHeight - kMarginBottom - h;
        os << "<rect x=\"" << coord(x) << "\" y=\"" << coord(y) << "\" width=\"" << coord(bar_w)
           << "\" height=\"" << coord(h) << "\" fill=\"" << kPalette[i % 6] << "\"/>\n";
        os << "<text x=\"" << coord(x + bar_w / 2.0) << "\" y=\"" << coord(y - 6)
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
           << fmt(bars[i].value) << "</text>\n";
        os << "<text x=\"" << coord(x + bar_w / 2.0) << "\" y=\"" << kHeight - kMarginBottom + 18
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
           << bars[i].label << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<LineSeries>& series) {
    std::ostringstream os;
    open_svg(os, title);
    axes(os);
    os << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 16
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << x_label
       << "</text>\n";
    os << "<text x=\"18\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" "
       << "font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 18 "
       << kHeight / 2 << ")\">" << y_label << "</text>\n";

    double max_v = 1.0, min_v = 0.0;
    std::size_t max_n = 1;
    for (const LineSeries& s : series) {
        max_n = std::max(max_n, s.values.size());
        for (double v : s.values) {
            max_v = std::max(max_v, v);
            min_v = std::min(min_v, v);
        }
    }
    double range = max_v - min_v;
    if (range <= 0.0) range = 1.0;

    double plot_w = kWidth - kMarginLeft - kMarginRight;
    double plot_h = kHeight - kMarginTop - kMarginBottom;

    for (std::size_t si = 0; si < series.size(); ++si) {
        const LineSeries& s = series[si];
        if (s.values.empty()) continue;
        os << "<polyline fill=\"none\" stroke=\"" << kPalette[si % 6]
           << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            double fx = max_n > 1 ? static_cast<double>(i) / static_cast<double>(max_n - 1) : 0.0;
            double x = kMarginLeft + plot_w * fx;
            double y = kHeight - kMarginBottom - plot_h * (s.values[i] - min_v) / range;
            if (i) os << ' ';
            os << coord(x) << ',' << coord(y);
        }
        os << "\"/>\n";
        os << "<text x=\"" << kWidth - kMarginRight - 4 << "\" y=\""
           << kMarginTop + 16 * static_cast<int>(si) << "\" text-anchor=\"end\" "
           << "font-family=\"sans-serif\" font-size=\"12\" fill=\"" << kPalette[si % 6] << "\">"
           << s.name << "</text>\n";
    }
    // y-axis extremes
    os << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << kMarginTop + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(max_v)
       << "</text>\n";
    os << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << kHeight - kMarginBottom
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(min_v)
       << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace codistill::cli
