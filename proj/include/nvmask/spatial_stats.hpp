#pragma once

#include "nvmask/geometry.hpp"

#include <iosfwd>
#include <optional>
#include <variant>
#include <vector>

namespace nvmask {

/// Distance from every point to its closest other point, via a kd-tree.
/// With lateral_only the z coordinate is ignored. Throws Error for < 2 points.
std::vector<double> nearest_neighbor_distances(const std::vector<Vec3>& points, bool lateral_only = false);
std::vector<double> nearest_neighbor_distances(const std::vector<Vec2>& points);

/// Fixed-width histogram; bin i covers [origin + i w, origin + (i + 1) w).
struct Histogram {
    double origin = 0.0;
    double bin_width = 1.0;
    std::vector<long> counts;

    double bin_center(std::size_t i) const { return origin + (static_cast<double>(i) + 0.5) * bin_width; }
    long total() const;

    /// Bins aligned to multiples of bin_width, with one empty bin padded on
    /// each side of the occupied range.
    static Histogram from_samples(const std::vector<double>& samples, double bin_width);

    static constexpr const char* csv_header = "bin_center_nm,count";
    void write_csv(std::ostream& out) const;
};

/// Full width at half maximum, interpolating linearly between bin centers
/// around the crossings nearest the peak. Throws Error naming the side when
/// the histogram never drops to half maximum there.
double fwhm(const Histogram& histogram);

struct DistanceDistribution {
    std::vector<double> samples;
    Histogram histogram;
    double fwhm = 0.0;
};

DistanceDistribution distance_distribution(const std::vector<Vec3>& points, double bin_width,
                                           bool lateral_only = false);

/// Regular lateral grid; node (i, j) sits at origin + (i, j) * spacing.
struct GridSpec {
    Vec2 origin{};
    double spacing = 1.0;
    long nx = 1;
    long ny = 1;

    Vec2 node(long i, long j) const;
    double cell_area() const { return spacing * spacing; }
};

struct ScottBandwidth {};
using Bandwidth = std::variant<ScottBandwidth, double>;

struct DensityGrid {
    GridSpec grid;
    std::vector<double> values; // row-major, index j * nx + i; per nm^2
    double bandwidth = 0.0;     // nm, as used
    /// Fraction of the total kernel mass that fell on the grid.
    double coverage = 1.0;
    /// True when coverage < 0.99.
    bool coverage_warning = false;

    double at(long i, long j) const { return values[static_cast<std::size_t>(j * grid.nx + i)]; }

    static constexpr const char* csv_header = "x_nm,y_nm,density";
    void write_csv(std::ostream& out) const;
};

/// Scott's rule for an isotropic 2D Gaussian kernel: pooled per-axis standard
/// deviation times n^(-1/6).
double scott_bandwidth(const std::vector<Vec2>& points);

/// Isotropic Gaussian kernel density estimate, normalized to unit integral
/// over the grid. Optional per-point weights.
DensityGrid kde2d(const std::vector<Vec2>& points, const GridSpec& grid, Bandwidth bandwidth = ScottBandwidth{},
                  const std::vector<double>& weights = {});

struct PlCountEstimate {
    double raw = 0.0;
    long rounded = 0;
};

/// Number of emitters as total PL over the single-emitter PL.
PlCountEstimate estimate_nv_count_from_pl(double total_pl_kcps, double single_nv_pl_kcps);

/// PL of a masked sample relative to a bare reference.
double measured_open_ratio(double pl_masked_kcps, double pl_bare_kcps);

} // namespace nvmask
