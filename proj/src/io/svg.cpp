#include "entmux/io/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace entmux::io {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;

std::string num(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

}  // namespace

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void SvgPlot::add_points(const std::vector<std::pair<double, double>>& pts,
                         const std::string& color) {
    series_.push_back(Series{pts, color, false});
}

void SvgPlot::add_curve(const std::vector<std::pair<double, double>>& pts,
                        const std::string& color) {
    series_.push_back(Series{pts, color, true});
}

std::string SvgPlot::str() const {
    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = x_lo, y_hi = -x_lo;
    for (const auto& s : series_) {
        for (const auto& [x, y] : s.pts) {
            x_lo = std::min(x_lo, x);
            x_hi = std::max(x_hi, x);
            y_lo = std::min(y_lo, y);
            y_hi = std::max(y_hi, y);
        }
    }
    if (!(x_lo < x_hi)) {
        x_lo -= 1.0;
        x_hi += 1.0;
    }
    if (!(y_lo < y_hi)) {
        y_lo -= 1.0;
        y_hi += 1.0;
    }
    y_lo = std::min(y_lo, 0.0);
    const double pad = 0.05 * (y_hi - y_lo);
    y_hi += pad;

    auto px = [&](double x) {
        return kLeft + (x - x_lo) / (x_hi - x_lo) * (kWidth - kLeft - kRight);
    };
    auto py = [&](double y) {
        return kHeight - kBottom - (y - y_lo) / (y_hi - y_lo) * (kHeight - kTop - kBottom);
    };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\">" << title_ << "</text>\n";

    // Axes with a few ticks.
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\""
        << kWidth - kRight << "\" y2=\"" << kHeight - kBottom
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
        << kHeight - kBottom << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double fx = x_lo + (x_hi - x_lo) * t / 4.0;
        const double fy = y_lo + (y_hi - y_lo) * t / 4.0;
        out << "<text x=\"" << px(fx) << "\" y=\"" << kHeight - kBottom + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << num(fx) << "</text>\n";
        out << "<text x=\"" << kLeft - 8 << "\" y=\"" << py(fy) + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << num(fy) << "</text>\n";
        out << "<line x1=\"" << px(fx) << "\" y1=\"" << kHeight - kBottom << "\" x2=\""
            << px(fx) << "\" y2=\"" << kHeight - kBottom + 4 << "\" stroke=\"black\"/>\n";
        out << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << py(fy) << "\" x2=\"" << kLeft
            << "\" y2=\"" << py(fy) << "\" stroke=\"black\"/>\n";
    }
    out << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << x_label_ << "</text>\n";
    out << "<text x=\"16\" y=\"" << (kTop + kHeight - kBottom) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
        << "transform=\"rotate(-90 16 " << (kTop + kHeight - kBottom) / 2 << ")\">"
        << y_label_ << "</text>\n";

    for (const auto& s : series_) {
        if (s.as_curve) {
            auto pts = s.pts;
            std::sort(pts.begin(), pts.end());
            out << "<polyline fill=\"none\" stroke=\"" << s.color
                << "\" stroke-width=\"1.5\" points=\"";
            for (const auto& [x, y] : pts) {
                out << num(px(x)) << ',' << num(py(y)) << ' ';
            }
            out << "\"/>\n";
        } else {
            for (const auto& [x, y] : s.pts) {
                out << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y))
                    << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
            }
        }
    }
    out << "</svg>\n";
    return out.str();
}

void SvgPlot::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out << str();
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

}  // namespace entmux::io
