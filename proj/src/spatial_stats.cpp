#include "nvmask/spatial_stats.hpp"

#include "nvmask/constants.hpp"
#include "nvmask/io.hpp"
#include "nvmask/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace nvmask {

namespace {

template <std::size_t Dim>
std::vector<double> nn_from_tree(std::vector<std::array<double, Dim>> pts)
{
    if (pts.size() < 2) throw Error("nearest-neighbour distances need at least two points");
    const KdTree<Dim> tree(std::move(pts));
    std::vector<double> out(tree.size());
    for (std::size_t i = 0; i < tree.size(); ++i)
        out[i] = std::sqrt(tree.nearest(tree.point(i), i).dist2);
    return out;
}

} // namespace

std::vector<double> nearest_neighbor_distances(const std::vector<Vec3>& points, bool lateral_only)
{
    if (lateral_only) {
        std::vector<std::array<double, 2>> pts;
        pts.reserve(points.size());
        for (const auto& p : points) pts.push_back({p.x, p.y});
        return nn_from_tree<2>(std::move(pts));
    }
    std::vector<std::array<double, 3>> pts;
    pts.reserve(points.size());
    for (const auto& p : points) pts.push_back({p.x, p.y, p.z});
    return nn_from_tree<3>(std::move(pts));
}

std::vector<double> nearest_neighbor_distances(const std::vector<Vec2>& points)
{
    std::vector<std::array<double, 2>> pts;
    pts.reserve(points.size());
    for (const auto& p : points) pts.push_back({p.x, p.y});
    return nn_from_tree<2>(std::move(pts));
}

long Histogram::total() const
{
    long s = 0;
    for (long c : counts) s += c;
    return s;
}

Histogram Histogram::from_samples(const std::vector<double>& samples, double bin_width)
{
    if (samples.empty()) throw Error("histogram needs at least one sample");
    if (!(bin_width > 0.0)) throw Error("histogram bin width must be positive");
    const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
    const long first = static_cast<long>(std::floor(*lo_it / bin_width)) - 1;
    const long last = static_cast<long>(std::floor(*hi_it / bin_width)) + 1;

    Histogram h;
    h.bin_width = bin_width;
    h.origin = static_cast<double>(first) * bin_width;
    h.counts.assign(static_cast<std::size_t>(last - first + 1), 0);
    for (double s : samples) {
        const long k = static_cast<long>(std::floor(s / bin_width)) - first;
        ++h.counts[static_cast<std::size_t>(k)];
    }
    return h;
}

void Histogram::write_csv(std::ostream& out) const
{
    out << csv_header << '\n';
    for (std::size_t i = 0; i < counts.size(); ++i)
        out << io::format_number(bin_center(i)) << ',' << counts[i] << '\n';
}

double fwhm(const Histogram& h)
{
    if (h.counts.empty()) throw Error("fwhm: empty histogram");
    const long peak = *std::max_element(h.counts.begin(), h.counts.end());
    if (peak <= 0) throw Error("fwhm: histogram has no counts");

    // leftmost run of bins at the maximum
    std::size_t begin = 0;
    while (h.counts[begin] != peak) ++begin;
    std::size_t end = begin;
    while (end + 1 < h.counts.size() && h.counts[end + 1] == peak) ++end;

    const double half = 0.5 * static_cast<double>(peak);
    auto crossing = [&](std::size_t below, std::size_t above) {
        const double nb = static_cast<double>(h.counts[below]);
        const double na = static_cast<double>(h.counts[above]);
        const double t = (half - nb) / (na - nb);
        return h.bin_center(below) + t * (h.bin_center(above) - h.bin_center(below));
    };

    std::size_t j = begin;
    while (j > 0 && static_cast<double>(h.counts[j - 1]) > half) --j;
    if (j == 0) throw Error("fwhm: distribution does not fall to half maximum on the left side");
    const double left = crossing(j - 1, j);

    std::size_t k = end;
    while (k + 1 < h.counts.size() && static_cast<double>(h.counts[k + 1]) > half) ++k;
    if (k + 1 >= h.counts.size()) throw Error("fwhm: distribution does not fall to half maximum on the right side");
    const double right = crossing(k + 1, k);

    return right - left;
}

DistanceDistribution distance_distribution(const std::vector<Vec3>& points, double bin_width, bool lateral_only)
{
    DistanceDistribution out;
    out.samples = nearest_neighbor_distances(points, lateral_only);
    out.histogram = Histogram::from_samples(out.samples, bin_width);
    out.fwhm = fwhm(out.histogram);
    return out;
}

Vec2 GridSpec::node(long i, long j) const
{
    return origin + Vec2{static_cast<double>(i) * spacing, static_cast<double>(j) * spacing};
}

void DensityGrid::write_csv(std::ostream& out) const
{
    out << csv_header << '\n';
    for (long j = 0; j < grid.ny; ++j) {
        for (long i = 0; i < grid.nx; ++i) {
            const Vec2 p = grid.node(i, j);
            out << io::format_number(p.x) << ',' << io::format_number(p.y) << ','
                << io::format_number(at(i, j)) << '\n';
        }
    }
}

double scott_bandwidth(const std::vector<Vec2>& points)
{
    const std::size_t n = points.size();
    if (n < 2) throw Error("Scott bandwidth needs at least two points; pass a fixed bandwidth");
    double mx = 0.0, my = 0.0;
    for (const auto& p : points) mx += p.x, my += p.y;
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double v = 0.0;
    for (const auto& p : points) v += (p.x - mx) * (p.x - mx) + (p.y - my) * (p.y - my);
    const double sigma = std::sqrt(v / (2.0 * static_cast<double>(n - 1)));
    if (!(sigma > 0.0)) throw Error("Scott bandwidth is zero for coincident points; pass a fixed bandwidth");
    return sigma * std::pow(static_cast<double>(n), -1.0 / 6.0);
}

DensityGrid kde2d(const std::vector<Vec2>& points, const GridSpec& grid, Bandwidth bandwidth,
                  const std::vector<double>& weights)
{
    if (points.empty()) throw Error("kde2d needs at least one point");
    if (grid.nx < 1 || grid.ny < 1 || !(grid.spacing > 0.0)) throw Error("kde2d: invalid grid");
    if (!weights.empty() && weights.size() != points.size()) throw Error("kde2d: weights/points size mismatch");

    const double h = std::holds_alternative<double>(bandwidth) ? std::get<double>(bandwidth)
                                                                : scott_bandwidth(points);
    if (!(h > 0.0)) throw Error("kde2d: bandwidth must be positive");

    DensityGrid out;
    out.grid = grid;
    out.bandwidth = h;
    const auto nx = static_cast<std::size_t>(grid.nx), ny = static_cast<std::size_t>(grid.ny);
    out.values.assign(nx * ny, 0.0);

    // the Gaussian kernel factorizes, so evaluate one row and one column per point
    const double inv2h2 = 1.0 / (2.0 * h * h);
    const double norm = 1.0 / (2.0 * constants::pi * h * h);
    std::vector<double> gx(nx), gy(ny);
    double total_weight = 0.0;
    for (std::size_t k = 0; k < points.size(); ++k) {
        const double w = weights.empty() ? 1.0 : weights[k];
        if (w < 0.0) throw Error("kde2d: weights must be nonnegative");
        total_weight += w;
        for (std::size_t i = 0; i < nx; ++i) {
            const double dx = grid.origin.x + static_cast<double>(i) * grid.spacing - points[k].x;
            gx[i] = std::exp(-dx * dx * inv2h2);
        }
        for (std::size_t j = 0; j < ny; ++j) {
            const double dy = grid.origin.y + static_cast<double>(j) * grid.spacing - points[k].y;
            gy[j] = w * norm * std::exp(-dy * dy * inv2h2);
        }
        for (std::size_t j = 0; j < ny; ++j) {
            double* row = out.values.data() + j * nx;
            const double yj = gy[j];
            for (std::size_t i = 0; i < nx; ++i) row[i] += yj * gx[i];
        }
    }
    if (!(total_weight > 0.0)) throw Error("kde2d: total weight is zero");

    double mass = 0.0;
    for (double v : out.values) mass += v;
    mass *= grid.cell_area();
    out.coverage = mass / total_weight;
    out.coverage_warning = out.coverage < 0.99;
    if (!(mass > 0.0)) throw Error("kde2d: no kernel mass falls on the grid");
    const double scale = 1.0 / mass;
    for (double& v : out.values) v *= scale;
    return out;
}

PlCountEstimate estimate_nv_count_from_pl(double total_pl_kcps, double single_nv_pl_kcps)
{
    if (!(single_nv_pl_kcps > 0.0)) throw Error("single-NV PL must be positive");
    if (total_pl_kcps < 0.0) throw Error("total PL must be >= 0");
    PlCountEstimate e;
    e.raw = total_pl_kcps / single_nv_pl_kcps;
    e.rounded = std::lround(e.raw);
    return e;
}

double measured_open_ratio(double pl_masked_kcps, double pl_bare_kcps)
{
    if (!(pl_bare_kcps > 0.0)) throw Error("bare-sample PL must be positive");
    if (pl_masked_kcps < 0.0) throw Error("masked-sample PL must be >= 0");
    return pl_masked_kcps / pl_bare_kcps;
}

} // namespace nvmask
