#pragma once

#include <string>
#include <vector>

namespace codistill::cli {

// Static SVG emitters with pinned formatting so regenerated plots are
// byte-identical.

struct BarDatum {
    std::string label;
    double value = 0.0;
};

std::string svg_bar_chart(const std::string& title, const std::string& y_label,
                          const std::vector<BarDatum>& bars);

struct LineSeries {
    std::string name;
    std::vector<double> values;  // x runs 1..n
};

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<LineSeries>& series);

}  // namespace codistill::cli
