#include "nvmask/svg.hpp"

#include "nvmask/io.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <sstream>

namespace nvmask::svg {

namespace {

constexpr double canvas = 400.0;
constexpr double margin = 40.0;

std::string escape(const std::string& s)
{
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

// piecewise-linear approximation of viridis
std::string ramp(double t)
{
    static constexpr std::array<std::array<double, 3>, 5> stops{{
        {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
    t = std::clamp(t, 0.0, 1.0) * (stops.size() - 1);
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(t), stops.size() - 2);
    const double f = t - static_cast<double>(k);
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                  static_cast<int>(stops[k][0] + f * (stops[k + 1][0] - stops[k][0]) + 0.5),
                  static_cast<int>(stops[k][1] + f * (stops[k + 1][1] - stops[k][1]) + 0.5),
                  static_cast<int>(stops[k][2] + f * (stops[k + 1][2] - stops[k][2]) + 0.5));
    return buf;
}

void open(std::ostringstream& out, const std::string& title)
{
    const double size = canvas + 2.0 * margin;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
        << "\" viewBox=\"0 0 " << size << ' ' << size << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << margin << "\" y=\"" << margin * 0.6 << "\" font-family=\"sans-serif\" font-size=\"13\">"
        << escape(title) << "</text>\n";
}

void axes(std::ostringstream& out, double x0, double x1, double y0, double y1)
{
    out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << canvas << "\" height=\"" << canvas
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    const double bottom = margin + canvas;
    out << "<g font-family=\"sans-serif\" font-size=\"10\">\n"
        << "<text x=\"" << margin << "\" y=\"" << bottom + 14 << "\">" << io::format_fixed(x0, 1) << "</text>\n"
        << "<text x=\"" << margin + canvas << "\" y=\"" << bottom + 14 << "\" text-anchor=\"end\">"
        << io::format_fixed(x1, 1) << "</text>\n"
        << "<text x=\"" << margin - 4 << "\" y=\"" << bottom << "\" text-anchor=\"end\">" << io::format_fixed(y0, 1)
        << "</text>\n"
        << "<text x=\"" << margin - 4 << "\" y=\"" << margin + 10 << "\" text-anchor=\"end\">"
        << io::format_fixed(y1, 1) << "</text>\n"
        << "<text x=\"" << margin + canvas / 2 << "\" y=\"" << bottom + 28 << "\" text-anchor=\"middle\">x (nm)</text>\n"
        << "</g>\n";
}

} // namespace

std::string heatmap(const DensityGrid& density, const std::string& title)
{
    const auto& g = density.grid;
    const double vmax = density.values.empty() ? 0.0 : *std::max_element(density.values.begin(), density.values.end());
    const double cw = canvas / static_cast<double>(g.nx);
    const double ch = canvas / static_cast<double>(g.ny);

    std::ostringstream out;
    open(out, title);
    out << "<g shape-rendering=\"crispEdges\">\n";
    for (long j = 0; j < g.ny; ++j) {
        for (long i = 0; i < g.nx; ++i) {
            const double t = vmax > 0.0 ? density.at(i, j) / vmax : 0.0;
            // y grows upward in data, downward in SVG
            out << "<rect x=\"" << io::format_fixed(margin + static_cast<double>(i) * cw, 2) << "\" y=\""
                << io::format_fixed(margin + static_cast<double>(g.ny - 1 - j) * ch, 2) << "\" width=\""
                << io::format_fixed(cw + 0.01, 2) << "\" height=\"" << io::format_fixed(ch + 0.01, 2) << "\" fill=\""
                << ramp(t) << "\"/>\n";
        }
    }
    out << "</g>\n";
    const double half = 0.5 * g.spacing;
    axes(out, g.origin.x - half, g.node(g.nx - 1, 0).x + half, g.origin.y - half, g.node(0, g.ny - 1).y + half);
    out << "</svg>\n";
    return out.str();
}

std::string scatter(const std::vector<Vec2>& points, double half_extent_nm, const std::string& title)
{
    if (!(half_extent_nm > 0.0)) throw Error("scatter plot extent must be positive");
    const double scale = canvas / (2.0 * half_extent_nm);
    std::ostringstream out;
    open(out, title);
    out << "<g fill=\"#3b528b\" fill-opacity=\"0.35\">\n";
    for (const auto& p : points) {
        if (std::abs(p.x) > half_extent_nm || std::abs(p.y) > half_extent_nm) continue;
        out << "<circle cx=\"" << io::format_fixed(margin + (p.x + half_extent_nm) * scale, 2) << "\" cy=\""
            << io::format_fixed(margin + (half_extent_nm - p.y) * scale, 2) << "\" r=\"1.2\"/>\n";
    }
    out << "</g>\n";
    axes(out, -half_extent_nm, half_extent_nm, -half_extent_nm, half_extent_nm);
    out << "</svg>\n";
    return out.str();
}

} // namespace nvmask::svg
