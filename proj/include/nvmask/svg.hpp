#pragma once

#include "nvmask/geometry.hpp"
#include "nvmask/spatial_stats.hpp"

#include <string>
#include <vector>

namespace nvmask::svg {

/// Static heatmap of a density grid with a linear colour ramp.
std::string heatmap(const DensityGrid& density, const std::string& title);

/// Scatter plot of lateral positions over the square [-half, half]^2.
std::string scatter(const std::vector<Vec2>& points, double half_extent_nm, const std::string& title);

} // namespace nvmask::svg
