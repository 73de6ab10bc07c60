#include "oracles.hpp"

#include "nvmask/spatial_stats.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace nvmask;

namespace {

std::vector<Vec3> uniform_cloud(std::size_t n, std::uint64_t seed, double side)
{
    Rng rng = substream(seed, Domain::synth, 1);
    std::vector<Vec3> pts(n);
    for (auto& p : pts) p = {side * uniform01(rng), side * uniform01(rng), side * uniform01(rng)};
    return pts;
}

} // namespace

TEST_CASE("nearest-neighbour basics")
{
    CHECK(nearest_neighbor_distances(std::vector<Vec3>{{0, 0, 0}, {7, 0, 0}}) == std::vector<double>{7.0, 7.0});
    CHECK(nearest_neighbor_distances(std::vector<Vec2>{{0, 0}, {3, 4}}) == std::vector<double>{5.0, 5.0});
    CHECK_THROWS_AS(nearest_neighbor_distances(std::vector<Vec3>{{0, 0, 0}}), Error);

    std::vector<Vec3> grid;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            for (int k = 0; k < 6; ++k) grid.push_back({2.5 * i, 2.5 * j, 2.5 * k});
    for (double d : nearest_neighbor_distances(grid)) CHECK(d == 2.5);

    // lateral mode ignores depth
    const std::vector<Vec3> stacked{{0, 0, 0}, {0, 0, 9}, {4, 0, 0}};
    CHECK(nearest_neighbor_distances(stacked, true) == std::vector<double>{0.0, 0.0, 4.0});
}

TEST_CASE("kd-tree equals brute force exactly")
{
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto pts = uniform_cloud(1000, seed, 100.0);
        CHECK(nearest_neighbor_distances(pts) == oracle::brute_force_nn(pts));
    }
    // clustered points with many ties
    std::vector<Vec3> ties;
    for (int i = 0; i < 300; ++i) ties.push_back({static_cast<double>(i % 7), static_cast<double>(i % 5), 0.0});
    CHECK(nearest_neighbor_distances(ties) == oracle::brute_force_nn(ties));
}

TEST_CASE("nearest-neighbour invariances")
{
    const auto pts = uniform_cloud(500, 4, 50.0);
    const auto base = nearest_neighbor_distances(pts);

    auto permuted = pts;
    std::reverse(permuted.begin(), permuted.end());
    auto d = nearest_neighbor_distances(permuted);
    std::reverse(d.begin(), d.end());
    CHECK(d == base);

    const double c = std::cos(0.7), s = std::sin(0.7);
    std::vector<Vec3> moved;
    for (const auto& p : pts) moved.push_back({c * p.x - s * p.y + 1e3, s * p.x + c * p.y - 250.0, p.z + 17.0});
    const auto m = nearest_neighbor_distances(moved);
    for (std::size_t i = 0; i < base.size(); ++i) CHECK(std::abs(m[i] - base[i]) <= 1e-9 * base[i]);
}

TEST_CASE("histogram layout")
{
    const auto h = Histogram::from_samples({1.2, 1.3, 2.7}, 0.5);
    CHECK(h.origin == 0.5);
    CHECK(h.counts == std::vector<long>{0, 2, 0, 0, 1, 0});
    CHECK(h.total() == 3);
    CHECK_THROWS_AS(Histogram::from_samples({}, 0.5), Error);
    CHECK_THROWS_AS(Histogram::from_samples({1.0}, 0.0), Error);
    std::ostringstream os;
    h.write_csv(os);
    CHECK(os.str().rfind("bin_center_nm,count\n0.75,0\n1.25,2\n", 0) == 0);
}

TEST_CASE("FWHM")
{
    Rng rng = substream(5, Domain::synth, 0);
    std::vector<double> g(100000);
    for (auto& v : g) v = standard_normal(rng);
    CHECK(fwhm(Histogram::from_samples(g, 0.05)) == doctest::Approx(2.3548).epsilon(0.1 / 2.3548));

    CHECK(fwhm(Histogram::from_samples({3.1, 3.2, 3.3}, 0.5)) == doctest::Approx(0.5).epsilon(1e-12));

    Histogram open_left;
    open_left.bin_width = 1.0;
    open_left.counts = {10, 4, 0};
    try {
        fwhm(open_left);
        FAIL("expected a left-side error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("left") != std::string::npos);
    }
    Histogram open_right = open_left;
    open_right.counts = {0, 4, 10};
    try {
        fwhm(open_right);
        FAIL("expected a right-side error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("right") != std::string::npos);
    }
}

TEST_CASE("KDE of a single point is one Gaussian")
{
    GridSpec g{{-10.0, -10.0}, 0.25, 81, 81};
    const auto d = kde2d({{0.5, -1.0}}, g, 2.0);
    const double pi = 3.14159265358979323846;
    double worst = 0.0;
    for (long j = 0; j < g.ny; ++j)
        for (long i = 0; i < g.nx; ++i) {
            const Vec2 n = g.node(i, j);
            const double r2 = (n.x - 0.5) * (n.x - 0.5) + (n.y + 1.0) * (n.y + 1.0);
            const double expect = std::exp(-r2 / 8.0) / (2.0 * pi * 4.0);
            worst = std::max(worst, std::abs(d.at(i, j) - expect));
        }
    // the grid carries almost all the mass, so renormalisation barely moves it
    CHECK(worst < 1e-4);
    CHECK(d.coverage == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(!d.coverage_warning);
    CHECK(d.bandwidth == 2.0);
}

TEST_CASE("KDE normalisation, oracle and weights")
{
    Rng rng = substream(6, Domain::synth, 0);
    std::vector<Vec2> pts(1000);
    for (auto& p : pts) p = {3.0 * standard_normal(rng), 3.0 * standard_normal(rng)};
    GridSpec g{{-20.0, -20.0}, 0.5, 81, 81};
    const auto d = kde2d(pts, g);
    double mass = 0.0;
    for (double v : d.values) {
        CHECK(v >= 0.0);
        mass += v;
    }
    CHECK(mass * g.cell_area() == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(d.bandwidth == doctest::Approx(scott_bandwidth(pts)).epsilon(1e-15));

    const auto naive = oracle::naive_kde(pts, g, d.bandwidth);
    double worst = 0.0;
    for (std::size_t k = 0; k < naive.size(); ++k) worst = std::max(worst, std::abs(naive[k] - d.values[k]));
    CHECK(worst < 1e-9);

    const auto w2 = kde2d(pts, g, d.bandwidth, std::vector<double>(pts.size(), 2.0));
    auto doubled = pts;
    doubled.insert(doubled.end(), pts.begin(), pts.end());
    const auto dd = kde2d(doubled, g, d.bandwidth);
    for (std::size_t k = 0; k < d.values.size(); ++k) {
        CHECK(w2.values[k] == doctest::Approx(d.values[k]).epsilon(1e-12));
        CHECK(dd.values[k] == doctest::Approx(d.values[k]).epsilon(1e-12));
    }
}

TEST_CASE("KDE coverage warning and errors")
{
    GridSpec small{{-1.0, -1.0}, 0.5, 5, 5};
    const auto d = kde2d({{0.0, 0.0}}, small, 3.0);
    CHECK(d.coverage < 0.99);
    CHECK(d.coverage_warning);
    CHECK_THROWS_AS(kde2d({}, small, 1.0), Error);
    CHECK_THROWS_AS(kde2d({{0.0, 0.0}}, small), Error); // Scott needs two points
    CHECK_THROWS_AS(kde2d({{0.0, 0.0}, {1.0, 1.0}}, small, 1.0, {1.0}), Error);
    CHECK_THROWS_AS(kde2d({{0.0, 0.0}}, small, -1.0), Error);
}

TEST_CASE("PL ratios")
{
    const auto three = estimate_nv_count_from_pl(180.0, 60.0);
    CHECK(three.raw == 3.0);
    CHECK(three.rounded == 3);
    CHECK(estimate_nv_count_from_pl(60.0, 60.0).rounded == 1);
    CHECK(estimate_nv_count_from_pl(0.0, 60.0).rounded == 0);
    CHECK_THROWS_AS(estimate_nv_count_from_pl(60.0, 0.0), Error);

    CHECK(measured_open_ratio(26.4, 100.0) == doctest::Approx(0.264).epsilon(1e-12));
    CHECK(measured_open_ratio(37.8, 100.0) == doctest::Approx(0.378).epsilon(1e-12));
    CHECK(measured_open_ratio(5.0, 5.0) == 1.0);
    CHECK_THROWS_AS(measured_open_ratio(1.0, 0.0), Error);
}

TEST_CASE("NN FWHM widens with lateral straggle")
{
    // replicate clusters of eight ions at fixed aperture centres, far apart
    const std::vector<Vec2> apertures{{0, 0},      {10.67, 0},  {-10.67, 0},    {5.335, 9.24},
                                      {-5.335, 9.24}, {5.335, -9.24}, {-5.335, -9.24}, {0, 18.48}};
    double previous = 0.0;
    for (double sigma : {1.0, 3.0, 6.0}) {
        Rng rng = substream(7, Domain::synth, 0);
        std::vector<Vec3> pts;
        for (int rep = 0; rep < 1500; ++rep) {
            const double shift = 1000.0 * rep;
            for (const auto& a : apertures)
                pts.push_back({shift + a.x + sigma * standard_normal(rng), a.y + sigma * standard_normal(rng),
                               20.0 + sigma * standard_normal(rng)});
        }
        const double w = distance_distribution(pts, 0.25).fwhm;
        INFO("sigma " << sigma << " fwhm " << w);
        CHECK(w > previous);
        previous = w;
    }
}
