#pragma once

#include <string>
#include <utility>
#include <vector>

namespace entmux::io {

/// Minimal dependency-free line plot: axes, sample points, optional fitted
/// curve. The CSV next to it is the authoritative output; this is a quick
/// look.
class SvgPlot {
public:
    SvgPlot(std::string title, std::string x_label, std::string y_label);

    void add_points(const std::vector<std::pair<double, double>>& pts,
                    const std::string& color = "#1f77b4");
    void add_curve(const std::vector<std::pair<double, double>>& pts,
                   const std::string& color = "#d62728");

    std::string str() const;
    void save(const std::string& path) const;

private:
    std::string title_, x_label_, y_label_;
    struct Series {
        std::vector<std::pair<double, double>> pts;
        std::string color;
        bool as_curve;
    };
    std::vector<Series> series_;
};

}  // namespace entmux::io
