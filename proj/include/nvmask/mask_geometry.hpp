#pragma once

#include "nvmask/geometry.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace nvmask {

/// Triangular lattice of circular apertures (nanoscale aperture array).
/// Centers sit on a triangular lattice of pitch aperture_diameter + wall_width.
struct NaaLattice {
    double aperture_diameter = 5.87; // nm
    double wall_width = 4.8;         // nm
    double thickness = 55.0;         // nm
    Vec2 offset{};                   // nm, position of site (0, 0)
    double rotation = 0.0;           // rad
    double diameter_jitter_sigma = 0.0; // nm; 0 disables jitter
    std::uint64_t jitter_seed = 0;

    double pitch() const { return aperture_diameter + wall_width; }

    /// Throws Error when an invariant is broken.
    void validate() const;

    /// Center of lattice site (i, j).
    Vec2 site_center(long i, long j) const;

    /// Nearest lattice site to p, as integer indices.
    std::pair<long, long> nearest_site(Vec2 p) const;

    /// Aperture diameter of site (i, j); a pure function of the indices and
    /// jitter_seed. Capped at the pitch so apertures never overlap.
    double site_diameter(long i, long j) const;
};

/// Circular holes patterned by e-beam lithography, given either as an explicit
/// list of centers or as a regular grid.
struct EblLayer {
    struct Grid {
        double pitch = 2000.0; // nm
        long nx = 1;
        long ny = 1;
        Vec2 origin{}; // center of hole (0, 0)
    };

    double hole_diameter = 32.23; // nm
    double thickness = 200.0;     // nm
    std::variant<std::vector<Vec2>, Grid> holes = Grid{};

    void validate() const;
    std::size_t hole_count() const;
    Vec2 hole_center(std::size_t index) const;

    /// Index of the hole whose disc contains p, if any.
    std::optional<std::size_t> hole_at(Vec2 p) const;
};

using MaskLayer = std::variant<NaaLattice, EblLayer>;

/// Ordered blocking layers. A lateral point transmits only when it is open in
/// every layer; walls block completely.
struct MaskStack {
    std::vector<MaskLayer> layers;
    double dead_layer_energy_loss = 0.0; // keV removed from every transmitted ion

    void validate() const;

    /// First EBL layer in the stack, if there is one.
    const EblLayer* ebl() const;
    /// First NAA layer in the stack, if there is one.
    const NaaLattice* naa() const;
};

/// Aperture area fraction of an ideal lattice: pi/sqrt(12) * (d_a / L_s)^2.
/// Throws Error for overlapping apertures.
double open_area_ratio(const NaaLattice& lattice);

bool transmits(const NaaLattice& lattice, Vec2 p);
bool transmits(const EblLayer& layer, Vec2 p);
bool transmits(const MaskStack& stack, Vec2 p);

enum class Containment { fully_inside, center_inside };

/// Aperture centers inside a circular hole, sorted by distance to hole_center.
std::vector<Vec2> apertures_in_hole(const NaaLattice& lattice, Vec2 hole_center,
                                    double hole_diameter,
                                    Containment containment = Containment::fully_inside);

/// Nominal dose scaled by the open fraction, ions/cm^2.
double effective_dose(double nominal_dose, double ratio);

Containment parse_containment(const std::string& name);

} // namespace nvmask
