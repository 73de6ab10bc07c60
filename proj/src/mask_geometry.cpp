#include "nvmask/mask_geometry.hpp"

#include "nvmask/constants.hpp"
#include "nvmask/random.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nvmask {

namespace {

constexpr double sqrt3 = 1.7320508075688772;

bool finite(Vec2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

Vec2 rotate(Vec2 v, double angle)
{
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

} // namespace

void NaaLattice::validate() const
{
    if (!(aperture_diameter > 0.0))
        throw Error("NAA aperture diameter must be positive");
    if (wall_width < 0.0) {
        std::ostringstream msg;
        msg << "NAA apertures overlap: aperture diameter " << aperture_diameter
            << " nm exceeds lattice pitch " << pitch() << " nm (wall width " << wall_width
            << " nm is negative)";
        throw Error(msg.str());
    }
    if (!(thickness > 0.0)) throw Error("NAA thickness must be positive");
    if (diameter_jitter_sigma < 0.0) throw Error("NAA diameter jitter must be >= 0");
    if (!finite(offset) || !std::isfinite(rotation)) throw Error("NAA offset/rotation must be finite");
}

Vec2 NaaLattice::site_center(long i, long j) const
{
    const double L = pitch();
    const Vec2 local{L * (static_cast<double>(i) + 0.5 * static_cast<double>(j)),
                     L * 0.5 * sqrt3 * static_cast<double>(j)};
    return offset + rotate(local, rotation);
}

std::pair<long, long> NaaLattice::nearest_site(Vec2 p) const
{
    const double L = pitch();
    const Vec2 q = rotate(p - offset, -rotation);
    const double jf = q.y / (L * 0.5 * sqrt3);
    const double i_f = q.x / L - 0.5 * jf;
    const long i0 = static_cast<long>(std::floor(i_f));
    const long j0 = static_cast<long>(std::floor(jf));

    // The nearest site is a vertex of the enclosing Delaunay triangle, which
    // is always one of the four corners of the enclosing rhombus.
    std::pair<long, long> best{i0, j0};
    double best_d2 = INFINITY;
    for (long dj = 0; dj <= 1; ++dj) {
        for (long di = 0; di <= 1; ++di) {
            const Vec2 d = q - Vec2{L * (static_cast<double>(i0 + di) + 0.5 * static_cast<double>(j0 + dj)),
                                    L * 0.5 * sqrt3 * static_cast<double>(j0 + dj)};
            const double d2 = d.x * d.x + d.y * d.y;
            if (d2 < best_d2) {
                best_d2 = d2;
                best = {i0 + di, j0 + dj};
            }
        }
    }
    return best;
}

double NaaLattice::site_diameter(long i, long j) const
{
    if (diameter_jitter_sigma <= 0.0) return aperture_diameter;

    std::uint64_t h = hash_combine(jitter_seed, static_cast<std::uint64_t>(i));
    h = hash_combine(h, static_cast<std::uint64_t>(j));
    const double u1 = (static_cast<double>(splitmix64(h) >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = static_cast<double>(splitmix64(h ^ 0xa5a5a5a5a5a5a5a5ULL) >> 11) * 0x1.0p-53;
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * constants::pi * u2);

    // log-normal with mean aperture_diameter and standard deviation sigma
    const double cv = diameter_jitter_sigma / aperture_diameter;
    const double s = std::sqrt(std::log1p(cv * cv));
    const double d = aperture_diameter * std::exp(s * z - 0.5 * s * s);
    return std::min(d, pitch());
}

void EblLayer::validate() const
{
    if (!(hole_diameter > 0.0)) throw Error("EBL hole diameter must be positive");
    if (!(thickness > 0.0)) throw Error("EBL thickness must be positive");
    if (const auto* grid = std::get_if<Grid>(&holes)) {
        if (!(grid->pitch > hole_diameter))
            throw Error("EBL grid pitch must exceed the hole diameter");
        if (grid->nx < 1 || grid->ny < 1) throw Error("EBL grid needs at least one hole per axis");
    }
}

std::size_t EblLayer::hole_count() const
{
    if (const auto* list = std::get_if<std::vector<Vec2>>(&holes)) return list->size();
    const auto& grid = std::get<Grid>(holes);
    return static_cast<std::size_t>(grid.nx) * static_cast<std::size_t>(grid.ny);
}

Vec2 EblLayer::hole_center(std::size_t index) const
{
    if (const auto* list = std::get_if<std::vector<Vec2>>(&holes)) return list->at(index);
    const auto& grid = std::get<Grid>(holes);
    const auto nx = static_cast<std::size_t>(grid.nx);
    const double ix = static_cast<double>(index % nx);
    const double iy = static_cast<double>(index / nx);
    return grid.origin + Vec2{ix * grid.pitch, iy * grid.pitch};
}

std::optional<std::size_t> EblLayer::hole_at(Vec2 p) const
{
    const double r = 0.5 * hole_diameter;
    if (const auto* list = std::get_if<std::vector<Vec2>>(&holes)) {
        for (std::size_t k = 0; k < list->size(); ++k)
            if (norm(p - (*list)[k]) <= r) return k;
        return std::nullopt;
    }
    const auto& grid = std::get<Grid>(holes);
    const double ix = std::round((p.x - grid.origin.x) / grid.pitch);
    const double iy = std::round((p.y - grid.origin.y) / grid.pitch);
    if (ix < 0 || iy < 0 || ix >= static_cast<double>(grid.nx) || iy >= static_cast<double>(grid.ny))
        return std::nullopt;
    const Vec2 c = grid.origin + Vec2{ix * grid.pitch, iy * grid.pitch};
    if (norm(p - c) > r) return std::nullopt;
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(grid.nx) + static_cast<std::size_t>(ix);
}

void MaskStack::validate() const
{
    for (const auto& layer : layers)
        std::visit([](const auto& l) { l.validate(); }, layer);
    if (dead_layer_energy_loss < 0.0) throw Error("dead-layer energy loss must be >= 0");
}

const EblLayer* MaskStack::ebl() const
{
    for (const auto& layer : layers)
        if (const auto* e = std::get_if<EblLayer>(&layer)) return e;
    return nullptr;
}

const NaaLattice* MaskStack::naa() const
{
    for (const auto& layer : layers)
        if (const auto* n = std::get_if<NaaLattice>(&layer)) return n;
    return nullptr;
}

double open_area_ratio(const NaaLattice& lattice)
{
    lattice.validate();
    const double L = lattice.pitch();
    const double hexagon_area = 1.5 * sqrt3 * L * L;
    const double r = 0.5 * lattice.aperture_diameter;
    const double aperture_area = constants::pi * r * r;
    return 3.0 * aperture_area / hexagon_area;
}

bool transmits(const NaaLattice& lattice, Vec2 p)
{
    if (!finite(p)) return false;
    const auto [i, j] = lattice.nearest_site(p);
    const double r = 0.5 * lattice.site_diameter(i, j);
    return norm(p - lattice.site_center(i, j)) <= r;
}

bool transmits(const EblLayer& layer, Vec2 p)
{
    if (!finite(p)) return false;
    return layer.hole_at(p).has_value();
}

bool transmits(const MaskStack& stack, Vec2 p)
{
    for (const auto& layer : stack.layers) {
        const bool open = std::visit([p](const auto& l) { return transmits(l, p); }, layer);
        if (!open) return false;
    }
    return true;
}

std::vector<Vec2> apertures_in_hole(const NaaLattice& lattice, Vec2 hole_center,
                                    double hole_diameter, Containment containment)
{
    if (!(hole_diameter > 0.0)) throw Error("hole diameter must be positive");
    lattice.validate();

    const double R = 0.5 * hole_diameter;
    const double L = lattice.pitch();
    const auto [ic, jc] = lattice.nearest_site(hole_center);
    const long span = static_cast<long>(std::ceil(R / (0.5 * sqrt3 * L))) + 2;

    struct Hit {
        double dist;
        Vec2 center;
    };
    std::vector<Hit> hits;
    for (long j = jc - span; j <= jc + span; ++j) {
        for (long i = ic - 2 * span; i <= ic + 2 * span; ++i) {
            const Vec2 c = lattice.site_center(i, j);
            const double d = norm(c - hole_center);
            const double limit = containment == Containment::fully_inside
                                     ? R - 0.5 * lattice.site_diameter(i, j)
                                     : R;
            if (d <= limit) hits.push_back({d, c});
        }
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        if (a.center.y != b.center.y) return a.center.y < b.center.y;
        return a.center.x < b.center.x;
    });

    std::vector<Vec2> out;
    out.reserve(hits.size());
    for (const auto& h : hits) out.push_back(h.center);
    return out;
}

double effective_dose(double nominal_dose, double ratio)
{
    if (nominal_dose < 0.0 || ratio < 0.0 || ratio > 1.0)
        throw Error("effective_dose needs dose >= 0 and 0 <= ratio <= 1");
    return nominal_dose * ratio;
}

Containment parse_containment(const std::string& name)
{
    if (name == "fully_inside") return Containment::fully_inside;
    if (name == "center_inside") return Containment::center_inside;
    throw Error("unknown containment rule '" + name + "' (expected fully_inside or center_inside)");
}

} // namespace nvmask
