#include "nvmask/constants.hpp"
#include "nvmask/implant_sim.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <cstring>

using namespace nvmask;

namespace {

NaaLattice nominal_naa()
{
    NaaLattice l;
    l.aperture_diameter = 5.87;
    l.wall_width = 4.8;
    return l;
}

RangeTable table_10kev(double drp, double drlat)
{
    return RangeTable({{1.0, 2.4, 0.5 * drp, 0.5 * drlat}, {10.0, 19.5, drp, drlat}, {20.0, 41.3, drp, drlat}});
}

ImplantConfig grid_config(long side, double dose, bool with_naa)
{
    ImplantConfig c;
    c.dose = dose;
    EblLayer ebl;
    ebl.holes = EblLayer::Grid{2000.0, side, side, {}};
    if (with_naa) c.mask.layers.push_back(nominal_naa());
    c.mask.layers.push_back(ebl);
    c.window = {-1000.0, -1000.0, 2000.0 * side - 1000.0, 2000.0 * side - 1000.0};
    c.transport = table_10kev(8.56, 7.30);
    c.rng_seed = 11;
    return c;
}

} // namespace

TEST_CASE("expected ion counts")
{
    const double area = constants::pi * 0.25 * 32.23 * 32.23;
    CHECK(expected_ion_count(4e13, area) == doctest::Approx(326.3).epsilon(1e-3));
    CHECK(expected_ion_count(4e13, area, open_area_ratio(nominal_naa())) == doctest::Approx(89.6).epsilon(1e-3));
    CHECK(expected_ion_count(0.0, area) == 0.0);
    CHECK_THROWS_AS(expected_ion_count(-1.0, area), Error);
}

TEST_CASE("entry sampling honours the mask")
{
    SUBCASE("zero dose gives no ions")
    {
        const auto r = run_implant(grid_config(3, 0.0, true));
        CHECK(r.spots.size() == 9);
        CHECK(r.defects.empty());
        for (const auto& s : r.spots) CHECK(s.ion_count == 0);
    }
    SUBCASE("a disc over solid resist passes nothing")
    {
        EblLayer far;
        far.holes = std::vector<Vec2>{{1000.0, 1000.0}};
        MaskStack stack;
        stack.layers.push_back(far);
        Rng rng = substream(1, Domain::synth, 0);
        CHECK(sample_disc_entries(1e14, {0.0, 0.0}, 50.0, stack, rng).empty());
        CHECK_THROWS_AS(sample_conditioned_entries(1, {0.0, 0.0}, 50.0, stack, rng), Error);
    }
    SUBCASE("no mask keeps the Poisson count")
    {
        ImplantConfig c;
        c.dose = 1e12;
        c.rng_seed = 3;
        c.transport = table_10kev(1.0, 1.0);
        const auto holes = sample_entries(c);
        REQUIRE(holes.size() == 1);
        CHECK(holes[0].hole_index == -1);
        const double mu = expected_ion_count(c.dose, c.window.area());
        CHECK(std::abs(static_cast<double>(holes[0].entries.size()) - mu) < 4.0 * std::sqrt(mu));
        for (const auto& p : holes[0].entries) CHECK(c.window.contains(p));
    }
    SUBCASE("NAA retention equals the open-area ratio")
    {
        MaskStack stack;
        stack.layers.push_back(nominal_naa());
        Rng rng = substream(2, Domain::synth, 0);
        const auto kept = sample_disc_entries(1e13, {0.0, 0.0}, 500.0, stack, rng);
        const double mu = expected_ion_count(1e13, constants::pi * 500.0 * 500.0, open_area_ratio(nominal_naa()));
        CHECK(std::abs(static_cast<double>(kept.size()) - mu) < 5.0 * std::sqrt(mu));
        for (const auto& p : kept) CHECK(transmits(stack, p));
    }
    SUBCASE("conditioned entries are all open and exactly counted")
    {
        MaskStack stack;
        stack.layers.push_back(nominal_naa());
        Rng rng = substream(4, Domain::synth, 0);
        const auto e = sample_conditioned_entries(250, {3.0, -2.0}, 16.0, stack, rng);
        CHECK(e.size() == 250);
        for (const auto& p : e) {
            CHECK(transmits(stack, p));
            CHECK(norm(p - Vec2{3.0, -2.0}) <= 16.0);
        }
    }
}

TEST_CASE("gaussian transport")
{
    MaskStack none;
    Rng rng = substream(5, Domain::synth, 0);
    const std::vector<Vec2> entries{{1.0, 2.0}, {-4.0, 7.5}};

    SUBCASE("zero straggle places ions exactly")
    {
        const auto ions = implant(entries, 20.0, none, RangeTable({{1.0, 2.0, 0.0, 0.0}, {20.0, 30.0, 0.0, 0.0}}), rng);
        REQUIRE(ions.size() == 2);
        CHECK(ions[1].x == -4.0);
        CHECK(ions[1].y == 7.5);
        CHECK(ions[1].z == 30.0);
    }
    SUBCASE("depth moments")
    {
        const std::vector<Vec2> many(20000, Vec2{});
        const auto ions = implant(many, 10.0, none, table_10kev(4.0, 3.0), rng);
        double mean = 0.0, mx = 0.0;
        for (const auto& p : ions) {
            mean += p.z;
            mx += p.x;
            CHECK(p.z > 0.0);
        }
        mean /= static_cast<double>(ions.size());
        mx /= static_cast<double>(ions.size());
        CHECK(std::abs(mean - 19.5) < 3.0 * 4.0 / std::sqrt(20000.0));
        CHECK(std::abs(mx) < 3.0 * 3.0 / std::sqrt(20000.0));
    }
    SUBCASE("dead layer lowers the energy before lookup")
    {
        MaskStack dead;
        dead.dead_layer_energy_loss = 10.0;
        const auto t = RangeTable({{1.0, 2.0, 0.0, 0.0}, {10.0, 15.0, 0.0, 0.0}, {20.0, 30.0, 0.0, 0.0}});
        CHECK(implant(entries, 20.0, dead, t, rng)[0].z == 15.0);
        dead.dead_layer_energy_loss = 20.0;
        CHECK_THROWS_AS(implant(entries, 20.0, dead, t, rng), Error);
        ImplantConfig c;
        c.transport = t;
        c.energy_kev = 5.0;
        c.mask.dead_layer_energy_loss = 5.0;
        CHECK_THROWS_AS(c.validate(), Error);
    }
    SUBCASE("energy outside the table")
    {
        CHECK_THROWS_AS(implant(entries, 0.5, none, table_10kev(1.0, 1.0), rng), Error);
    }
}

TEST_CASE("NV conversion")
{
    std::vector<Vec3> ions(40000, Vec3{1.0, 2.0, 3.0});
    Rng rng = substream(6, Domain::synth, 0);
    for (const auto& d : convert_to_nv(ions, 0.0, rng)) {
        CHECK(d.kind == DefectKind::nitrogen);
        CHECK(!d.orientation);
    }
    const auto all = convert_to_nv(ions, 1.0, rng);
    std::array<double, 4> counts{};
    for (const auto& d : all) {
        REQUIRE(d.kind == DefectKind::nv);
        REQUIRE(d.orientation);
        counts[static_cast<int>(*d.orientation)] += 1.0;
        CHECK(d.position.z == 3.0);
    }
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - 10000.0) * (c - 10000.0) / 10000.0;
    CHECK(chi2 < 16.27); // 3 dof, p = 0.001

    long nv = 0;
    for (const auto& d : convert_to_nv(ions, 0.25, rng)) nv += d.kind == DefectKind::nv;
    CHECK(std::abs(nv - 10000.0) < 5.0 * std::sqrt(40000.0 * 0.25 * 0.75));
    CHECK_THROWS_AS(convert_to_nv(ions, 1.5, rng), Error);
}

TEST_CASE("NV axes are the four bond directions")
{
    for (int i = 0; i < 4; ++i) {
        const Vec3 a = axis_vector(static_cast<NvAxis>(i));
        CHECK(dot(a, a) == doctest::Approx(1.0).epsilon(1e-15));
        for (int j = i + 1; j < 4; ++j)
            CHECK(dot(a, axis_vector(static_cast<NvAxis>(j))) == doctest::Approx(-1.0 / 3.0).epsilon(1e-14));
    }
    CHECK(std::string(axis_name(NvAxis::a111)) == "111");
    CHECK(std::string(axis_name(NvAxis::abb1)) == "-1-11");
}

TEST_CASE("conversion yield guard")
{
    ImplantConfig c;
    c.transport = table_10kev(1.0, 1.0);
    c.conversion_yield = 0.05;
    CHECK_THROWS_AS(c.validate(), Error);
    c.allow_high_yield = true;
    CHECK_NOTHROW(c.validate());
    c.conversion_yield = 1.2;
    CHECK_THROWS_AS(c.validate(), Error);
    ImplantConfig empty_table;
    CHECK_THROWS_AS(empty_table.validate(), Error);
}

TEST_CASE("lateral footprint of a hole")
{
    ImplantConfig c = grid_config(10, 4e13, false);
    const auto r = run_implant(c, 2);
    double s2 = 0.0;
    long n = 0;
    for (const auto& [hole, d] : r.defects) {
        const Vec2 centre = std::get<EblLayer::Grid>(c.mask.ebl()->holes).origin +
                            Vec2{2000.0 * (hole % 10), 2000.0 * (hole / 10)};
        CHECK(centre.x == c.mask.ebl()->hole_center(static_cast<std::size_t>(hole)).x);
        s2 += (d.position.x - centre.x) * (d.position.x - centre.x);
        ++n;
    }
    REQUIRE(n > 20000);
    const double expected = std::sqrt(std::pow(32.23 / 4.0, 2) + 7.30 * 7.30);
    CHECK(std::sqrt(s2 / n) == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("run bookkeeping and thread independence")
{
    ImplantConfig c = grid_config(6, 4e13, true);
    c.conversion_yield = 0.02;
    const auto a = run_implant(c, 1);
    const auto b = run_implant(c, 4);
    REQUIRE(a.defects.size() == b.defects.size());
    for (std::size_t i = 0; i < a.defects.size(); ++i) {
        CHECK(a.defects[i].first == b.defects[i].first);
        CHECK(std::memcmp(&a.defects[i].second.position, &b.defects[i].second.position, sizeof(Vec3)) == 0);
        CHECK(a.defects[i].second.kind == b.defects[i].second.kind);
    }

    long ions = 0, nvs = 0, nv_defects = 0;
    for (const auto& s : a.spots) {
        ions += s.ion_count;
        nvs += s.nv_count;
        CHECK(static_cast<long>(s.nv_sites.size()) == s.nv_count);
    }
    for (const auto& d : a.defects) nv_defects += d.second.kind == DefectKind::nv;
    CHECK(ions == static_cast<long>(a.defects.size()));
    CHECK(nvs == nv_defects);

    const auto p = nv_count_distribution(a.spots);
    double total = 0.0;
    for (double v : p) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(nv_count_distribution({}), Error);

    // the window selects holes by centre
    c.window = {-1000.0, -1000.0, 3000.0, 1000.0};
    const auto two = run_implant(c, 1);
    REQUIRE(two.spots.size() == 2);
    CHECK(two.spots[0].hole_index == 0);
    CHECK(two.spots[1].hole_index == 1);
    CHECK(two.spots[1].ion_count == a.spots[1].ion_count);
}

TEST_CASE("BCA transport inside an implant run")
{
    ImplantConfig c = grid_config(2, 4e13, true);
    BcaParams p;
    p.rng_seed = 8;
    c.transport = p;
    c.energy_kev = 2.5;
    const auto r = run_implant(c, 1);
    long ions = 0;
    for (const auto& s : r.spots) ions += s.ion_count;
    CHECK(ions > 0);
    for (const auto& [hole, d] : r.defects) CHECK(d.position.z > 0.0);
}
