#include "nvmask/implant_sim.hpp"

#include "nvmask/constants.hpp"
#include "nvmask/io.hpp"
#include "nvmask/parallel.hpp"

#include <cmath>

namespace nvmask {

namespace {

constexpr double inv_sqrt3 = 0.57735026918962576;

Vec2 uniform_in_disc(Vec2 center, double radius, Rng& rng)
{
    const double r = radius * std::sqrt(uniform01(rng));
    const double phi = 2.0 * constants::pi * uniform01(rng);
    return center + Vec2{r * std::cos(phi), r * std::sin(phi)};
}

long poisson(double mean, Rng& rng)
{
    if (mean <= 0.0) return 0;
    std::poisson_distribution<long> dist(mean);
    return dist(rng);
}

} // namespace

void ImplantConfig::validate() const
{
    if (!(energy_kev > 0.0)) throw Error("implant energy must be positive");
    if (dose < 0.0) throw Error("dose must be >= 0");
    if (!(window.area() > 0.0)) throw Error("implant window must have positive area");
    if (conversion_yield < 0.0 || conversion_yield > 1.0) throw Error("conversion yield must lie in [0, 1]");
    if (conversion_yield > default_max_conversion_yield && !allow_high_yield)
        throw Error("conversion yield " + io::format_number(conversion_yield) +
                    " exceeds 0.03; set allow_high_yield to override");
    mask.validate();
    if (!(mask.dead_layer_energy_loss < energy_kev))
        throw Error("dead-layer energy loss must be below the beam energy");
    if (const auto* table = std::get_if<RangeTable>(&transport)) {
        if (table->empty()) throw Error("gaussian transport needs a range table");
    } else {
        std::get<BcaParams>(transport).validate();
    }
}

Vec3 axis_vector(NvAxis axis)
{
    switch (axis) {
    case NvAxis::a111: return {inv_sqrt3, inv_sqrt3, inv_sqrt3};
    case NvAxis::a1bb: return {inv_sqrt3, -inv_sqrt3, -inv_sqrt3};
    case NvAxis::ab1b: return {-inv_sqrt3, inv_sqrt3, -inv_sqrt3};
    case NvAxis::abb1: return {-inv_sqrt3, -inv_sqrt3, inv_sqrt3};
    }
    return {};
}

const char* axis_name(NvAxis axis)
{
    switch (axis) {
    case NvAxis::a111: return "111";
    case NvAxis::a1bb: return "1-1-1";
    case NvAxis::ab1b: return "-11-1";
    case NvAxis::abb1: return "-1-11";
    }
    return "?";
}

double expected_ion_count(double dose, double area_nm2, double open_fraction)
{
    if (dose < 0.0 || area_nm2 < 0.0 || open_fraction < 0.0)
        throw Error("expected_ion_count needs nonnegative inputs");
    return dose * area_nm2 * constants::nm2_to_cm2 * open_fraction;
}

std::vector<Vec2> sample_disc_entries(double dose, Vec2 center, double radius, const MaskStack& stack,
                                      Rng& rng)
{
    const long n = poisson(expected_ion_count(dose, constants::pi * radius * radius), rng);
    std::vector<Vec2> out;
    for (long k = 0; k < n; ++k) {
        const Vec2 p = uniform_in_disc(center, radius, rng);
        if (transmits(stack, p)) out.push_back(p);
    }
    return out;
}

std::vector<Vec2> sample_conditioned_entries(std::size_t count, Vec2 center, double radius,
                                             const MaskStack& stack, Rng& rng)
{
    std::vector<Vec2> out;
    out.reserve(count);
    std::size_t tries = 0;
    const std::size_t max_tries = 1000 * (count + 1) + 100000;
    while (out.size() < count) {
        if (++tries > max_tries)
            throw Error("sample_conditioned_entries: mask is (nearly) closed over the sampling disc");
        const Vec2 p = uniform_in_disc(center, radius, rng);
        if (transmits(stack, p)) out.push_back(p);
    }
    return out;
}

std::vector<Vec3> implant(const std::vector<Vec2>& entries, double energy_kev, const MaskStack& mask,
                          const TransportModel& transport, Rng& rng)
{
    const double e = energy_kev - mask.dead_layer_energy_loss;
    if (!(e > 0.0)) throw Error("dead-layer loss leaves no energy for implantation");

    std::vector<Vec3> out;
    out.reserve(entries.size());
    if (const auto* table = std::get_if<RangeTable>(&transport)) {
        const RangeRow row = table->lookup(e);
        for (const Vec2& p : entries) {
            const double dx = row.drlat_nm * standard_normal(rng);
            const double dy = row.drlat_nm * standard_normal(rng);
            double z = row.rp_nm;
            if (row.drp_nm > 0.0) {
                // truncated normal: redraw until the ion is inside the target
                do {
                    z = row.rp_nm + row.drp_nm * standard_normal(rng);
                } while (!(z > 0.0));
            }
            out.push_back({p.x + dx, p.y + dy, z});
        }
        return out;
    }

    const auto& params = std::get<BcaParams>(transport);
    for (const Vec2& p : entries) {
        const StoppedIon ion = transport_ion(e, p, params, rng);
        // a backscattered ion leaves the sample and is not a defect
        if (!ion.backscattered) out.push_back(ion.position);
    }
    return out;
}

std::vector<DefectSite> convert_to_nv(const std::vector<Vec3>& ions, double eta, Rng& rng)
{
    if (eta < 0.0 || eta > 1.0) throw Error("conversion yield must lie in [0, 1]");
    std::vector<DefectSite> out;
    out.reserve(ions.size());
    for (const Vec3& p : ions) {
        DefectSite site;
        site.position = p;
        if (uniform01(rng) < eta) {
            site.kind = DefectKind::nv;
            site.orientation = static_cast<NvAxis>(rng() >> 62);
        }
        out.push_back(site);
    }
    return out;
}

std::vector<HoleEntries> sample_entries(const ImplantConfig& config, unsigned threads)
{
    config.validate();
    std::vector<HoleEntries> out;
    const EblLayer* ebl = config.mask.ebl();
    if (ebl == nullptr) {
        Rng rng = substream(config.rng_seed, Domain::window, 0);
        const auto& w = config.window;
        const long n = poisson(expected_ion_count(config.dose, w.area()), rng);
        HoleEntries region;
        for (long k = 0; k < n; ++k) {
            const Vec2 p{w.x0 + w.width() * uniform01(rng), w.y0 + w.height() * uniform01(rng)};
            if (transmits(config.mask, p)) region.entries.push_back(p);
        }
        out.push_back(std::move(region));
        return out;
    }

    std::vector<std::size_t> holes;
    for (std::size_t k = 0; k < ebl->hole_count(); ++k)
        if (config.window.contains(ebl->hole_center(k))) holes.push_back(k);

    out.resize(holes.size());
    parallel_for(holes.size(), threads, [&](std::size_t i) {
        const std::size_t k = holes[i];
        Rng rng = substream(config.rng_seed, Domain::hole, k);
        out[i].hole_index = static_cast<long>(k);
        out[i].hole_center = ebl->hole_center(k);
        out[i].entries = sample_disc_entries(config.dose, out[i].hole_center, 0.5 * ebl->hole_diameter,
                                             config.mask, rng);
    });
    return out;
}

ImplantResult run_implant(const ImplantConfig& config, unsigned threads)
{
    config.validate();
    ImplantResult result;
    const EblLayer* ebl = config.mask.ebl();

    auto finish_spot = [&](SpotReport& spot, const std::vector<Vec2>& entries, Rng& rng,
                           std::vector<DefectSite>& defects) {
        const auto ions = implant(entries, config.energy_kev, config.mask, config.transport, rng);
        defects = convert_to_nv(ions, config.conversion_yield, rng);
        spot.ion_count = static_cast<long>(ions.size());
        for (const auto& d : defects)
            if (d.kind == DefectKind::nv) spot.nv_sites.push_back(d);
        spot.nv_count = static_cast<long>(spot.nv_sites.size());
    };

    if (ebl == nullptr) {
        // one region: the same substream continues from sampling into transport
        Rng rng = substream(config.rng_seed, Domain::window, 0);
        const auto& w = config.window;
        const long n = poisson(expected_ion_count(config.dose, w.area()), rng);
        std::vector<Vec2> entries;
        for (long k = 0; k < n; ++k) {
            const Vec2 p{w.x0 + w.width() * uniform01(rng), w.y0 + w.height() * uniform01(rng)};
            if (transmits(config.mask, p)) entries.push_back(p);
        }
        SpotReport spot;
        spot.hole_center = {0.5 * (w.x0 + w.x1), 0.5 * (w.y0 + w.y1)};
        std::vector<DefectSite> defects;
        finish_spot(spot, entries, rng, defects);
        for (auto& d : defects) result.defects.emplace_back(-1, d);
        result.spots.push_back(std::move(spot));
        return result;
    }

    std::vector<std::size_t> holes;
    for (std::size_t k = 0; k < ebl->hole_count(); ++k)
        if (config.window.contains(ebl->hole_center(k))) holes.push_back(k);

    std::vector<SpotReport> spots(holes.size());
    std::vector<std::vector<DefectSite>> defects(holes.size());
    parallel_for(holes.size(), threads, [&](std::size_t i) {
        const std::size_t k = holes[i];
        Rng rng = substream(config.rng_seed, Domain::hole, k);
        SpotReport& spot = spots[i];
        spot.hole_index = static_cast<long>(k);
        spot.hole_center = ebl->hole_center(k);
        const auto entries =
            sample_disc_entries(config.dose, spot.hole_center, 0.5 * ebl->hole_diameter, config.mask, rng);
        finish_spot(spot, entries, rng, defects[i]);
    });

    for (std::size_t i = 0; i < holes.size(); ++i)
        for (auto& d : defects[i]) result.defects.emplace_back(spots[i].hole_index, d);
    result.spots = std::move(spots);
    return result;
}

std::vector<double> nv_count_distribution(const std::vector<SpotReport>& reports)
{
    if (reports.empty()) throw Error("nv_count_distribution needs at least one report");
    long max_n = 0;
    for (const auto& r : reports) max_n = std::max(max_n, r.nv_count);
    std::vector<double> p(static_cast<std::size_t>(max_n) + 1, 0.0);
    for (const auto& r : reports) p[static_cast<std::size_t>(r.nv_count)] += 1.0;
    for (auto& v : p) v /= static_cast<double>(reports.size());
    return p;
}

} // namespace nvmask
