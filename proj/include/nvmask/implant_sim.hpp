#pragma once

#include "nvmask/bca_transport.hpp"
#include "nvmask/geometry.hpp"
#include "nvmask/mask_geometry.hpp"
#include "nvmask/random.hpp"
#include "nvmask/range_table.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

namespace nvmask {

/// Upper bound on the conversion yield accepted without an explicit override.
inline constexpr double default_max_conversion_yield = 0.03;
/// Conversion yield fitted so that about 70% of 32 nm holes behind the default
/// aperture array stay empty at 4e13 ions/cm^2.
inline constexpr double calibrated_conversion_yield = 0.004;

/// Stopping-position model: Gaussian moments from a range table, or full BCA.
using TransportModel = std::variant<RangeTable, BcaParams>;

struct ImplantConfig {
    double energy_kev = 10.0;
    double dose = 4e13; // ions / cm^2
    Rect window{0.0, 0.0, 1000.0, 1000.0};
    MaskStack mask{};
    TransportModel transport = RangeTable{};
    double conversion_yield = calibrated_conversion_yield;
    bool allow_high_yield = false;
    std::uint64_t rng_seed = 1;

    void validate() const;
};

/// The four <111> bond directions an NV axis can take.
enum class NvAxis : std::uint8_t { a111 = 0, a1bb = 1, ab1b = 2, abb1 = 3 };

/// Unit vector of an NV axis in lab coordinates (z along the implant beam).
Vec3 axis_vector(NvAxis axis);
const char* axis_name(NvAxis axis);

enum class DefectKind : std::uint8_t { nitrogen, nv };

struct DefectSite {
    Vec3 position{};
    DefectKind kind = DefectKind::nitrogen;
    std::optional<NvAxis> orientation; // present iff kind == nv
};

struct SpotReport {
    long hole_index = -1;
    Vec2 hole_center{};
    long ion_count = 0;
    long nv_count = 0;
    std::vector<DefectSite> nv_sites;
};

/// Entry points that passed the mask, grouped by the EBL hole they fell in.
/// hole_index is -1 when the stack has no EBL layer.
struct HoleEntries {
    long hole_index = -1;
    Vec2 hole_center{};
    std::vector<Vec2> entries;
};

/// dose (ions/cm^2) x area (nm^2) x open fraction.
double expected_ion_count(double dose, double area_nm2, double open_fraction = 1.0);

/// Poisson arrivals over the window (or over each EBL hole disc inside the
/// window), kept only where the mask transmits. Hole k draws from its own
/// substream, so the result does not depend on thread count.
std::vector<HoleEntries> sample_entries(const ImplantConfig& config, unsigned threads = 1);

/// Entries for a single region: Poisson count over a disc, filtered by stack.
std::vector<Vec2> sample_disc_entries(double dose, Vec2 center, double radius, const MaskStack& stack,
                                      Rng& rng);

/// Exactly `count` transmitted entries, uniform over the open part of the
/// disc. Throws Error if the open area is too small to hit.
std::vector<Vec2> sample_conditioned_entries(std::size_t count, Vec2 center, double radius,
                                             const MaskStack& stack, Rng& rng);

/// Stopping positions for the given entries. The energy is reduced by the
/// stack's dead-layer loss before the table lookup or BCA run.
std::vector<Vec3> implant(const std::vector<Vec2>& entries, double energy_kev, const MaskStack& mask,
                          const TransportModel& transport, Rng& rng);

/// Each ion independently becomes an NV with probability eta; NV axes are
/// uniform over the four orientations.
std::vector<DefectSite> convert_to_nv(const std::vector<Vec3>& ions, double eta, Rng& rng);

/// Result of a full dose-driven run.
struct ImplantResult {
    std::vector<SpotReport> spots;
    /// every defect, NV and non-converted nitrogen, with its hole index
    std::vector<std::pair<long, DefectSite>> defects;
};

/// Sample -> transport -> convert for every hole in the window.
ImplantResult run_implant(const ImplantConfig& config, unsigned threads = 1);

/// Empirical P(N) over the reports; index is the NV count.
std::vector<double> nv_count_distribution(const std::vector<SpotReport>& reports);

} // namespace nvmask
