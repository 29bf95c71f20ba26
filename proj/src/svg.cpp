#include "rabiquench/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace rabiquench::svg {

namespace {

std::string fixed(double v) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.2f", v);
    return buffer;
}

std::string tick_label(double v) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buffer;
}

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

std::pair<double, double> extent(const Panel& panel, bool x_axis) {
    const auto& fixed_range = x_axis ? panel.x_range : panel.y_range;
    if (fixed_range) return *fixed_range;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& s : panel.series) {
        const auto& values = x_axis ? s.x : s.y;
        for (double v : values) {
            if (!std::isfinite(v)) continue;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (!x_axis && s.style == Style::Bars) lo = std::min(lo, 0.0);
    }
    if (!std::isfinite(lo)) return {0.0, 1.0};
    if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = x_axis ? 0.0 : 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

}  // namespace

std::string render(std::span<const Panel> panels, double width, double panel_height) {
    const double left = 70.0, right = 150.0, top = 36.0, bottom = 46.0;
    const double height = panel_height * static_cast<double>(std::max<std::size_t>(panels.size(), 1));
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width) << "\" height=\"" << fixed(height)
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (std::size_t p = 0; p < panels.size(); ++p) {
        const Panel& panel = panels[p];
        const double y0 = panel_height * static_cast<double>(p);
        const double plot_w = width - left - right;
        const double plot_h = panel_height - top - bottom;
        const auto [xmin, xmax] = extent(panel, true);
        const auto [ymin, ymax] = extent(panel, false);
        const auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * plot_w; };
        const auto sy = [&](double y) { return y0 + top + (1.0 - (y - ymin) / (ymax - ymin)) * plot_h; };

        out << "<g>\n<text x=\"" << fixed(left) << "\" y=\"" << fixed(y0 + 20) << "\" font-size=\"14\">"
            << escape(panel.title) << "</text>\n";
        out << "<rect x=\"" << fixed(left) << "\" y=\"" << fixed(y0 + top) << "\" width=\"" << fixed(plot_w)
            << "\" height=\"" << fixed(plot_h) << "\" fill=\"none\" stroke=\"black\"/>\n";
        for (int i = 0; i <= 4; ++i) {
            const double fx = xmin + (xmax - xmin) * i / 4.0;
            const double fy = ymin + (ymax - ymin) * i / 4.0;
            out << "<text x=\"" << fixed(sx(fx)) << "\" y=\"" << fixed(y0 + top + plot_h + 16)
                << "\" text-anchor=\"middle\">" << tick_label(fx) << "</text>\n";
            out << "<text x=\"" << fixed(left - 6) << "\" y=\"" << fixed(sy(fy) + 4) << "\" text-anchor=\"end\">"
                << tick_label(fy) << "</text>\n";
        }
        out << "<text x=\"" << fixed(left + plot_w / 2) << "\" y=\"" << fixed(y0 + panel_height - 8)
            << "\" text-anchor=\"middle\">" << escape(panel.x_label) << "</text>\n";
        out << "<text transform=\"translate(16," << fixed(y0 + top + plot_h / 2)
            << ") rotate(-90)\" text-anchor=\"middle\">" << escape(panel.y_label) << "</text>\n";

        double legend_y = y0 + top + 12;
        for (const auto& s : panel.series) {
            const std::size_t n = std::min(s.x.size(), s.y.size());
            if (s.style == Style::Line) {
                out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.2\" points=\"";
                for (std::size_t i = 0; i < n; ++i) {
                    if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                    out << fixed(sx(s.x[i])) << ',' << fixed(sy(s.y[i])) << ' ';
                }
                out << "\"/>\n";
            } else if (s.style == Style::Points) {
                for (std::size_t i = 0; i < n; ++i) {
                    if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                    out << "<circle cx=\"" << fixed(sx(s.x[i])) << "\" cy=\"" << fixed(sy(s.y[i]))
                        << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
                }
            } else {
                const double bar = n > 1 ? (s.x[1] - s.x[0]) : 1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (!std::isfinite(s.y[i])) continue;
                    const double xl = sx(s.x[i] - 0.5 * bar);
                    const double xr = sx(s.x[i] + 0.5 * bar);
                    const double yt = sy(std::max(s.y[i], ymin));
                    const double yb = sy(std::max(0.0, ymin));
                    out << "<rect x=\"" << fixed(xl) << "\" y=\"" << fixed(yt) << "\" width=\"" << fixed(xr - xl)
                        << "\" height=\"" << fixed(std::max(0.0, yb - yt)) << "\" fill=\"" << s.color
                        << "\" stroke=\"white\"/>\n";
                }
            }
            if (!s.label.empty()) {
                out << "<rect x=\"" << fixed(left + plot_w + 10) << "\" y=\"" << fixed(legend_y - 9)
                    << "\" width=\"10\" height=\"10\" fill=\"" << s.color << "\"/>\n";
                out << "<text x=\"" << fixed(left + plot_w + 24) << "\" y=\"" << fixed(legend_y) << "\">"
                    << escape(s.label) << "</text>\n";
                legend_y += 16;
            }
        }
        out << "</g>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace rabiquench::svg
