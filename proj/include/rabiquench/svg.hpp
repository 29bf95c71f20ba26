#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rabiquench::svg {

enum class Style { Line, Points, Bars };

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    Style style = Style::Line;
    std::string color = "#1f77b4";
};

struct Panel {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    std::optional<std::pair<double, double>> x_range;
    std::optional<std::pair<double, double>> y_range;
};

/// Static SVG with the panels stacked vertically. Non-finite points are
/// skipped.
std::string render(std::span<const Panel> panels, double width = 720.0, double panel_height = 300.0);

}  // namespace rabiquench::svg
