#pragma once

#include "nvmask/bca_transport.hpp"
#include "nvmask/implant_sim.hpp"
#include "nvmask/mask_geometry.hpp"
#include "nvmask/spatial_stats.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace nvmask {

enum class TransportKind { gaussian, bca };

struct SweepConfig {
    std::vector<double> energies_kev{2.5, 10.0};
    std::vector<double> hole_diameters_nm{18.0, 27.0, 41.0};
    std::vector<bool> naa{true, false};
    /// Transmitted ions per cell, spread over as many replicate holes as needed.
    std::size_t ions_per_cell = 10000;
    double bin_width_nm = 0.5;
    double kde_spacing_nm = 0.5;
    Bandwidth bandwidth = ScottBandwidth{};
    bool lateral_only = false;
    bool svg = false;
};

struct PlConfig {
    double single_nv_kcps = 60.0;
    std::optional<double> total_kcps;
    std::optional<double> masked_kcps;
    std::optional<double> bare_kcps;
};

/// Everything a batch run needs. Mask layers are kept apart so commands can
/// toggle them; build_mask() assembles the stack.
struct RunConfig {
    std::optional<std::uint64_t> seed;

    double energy_kev = 10.0;
    double dose = 4e13;
    std::optional<Rect> window; // defaults to the EBL grid extent
    double conversion_yield = calibrated_conversion_yield;
    bool allow_high_yield = false;
    double dead_layer_kev = 0.0;

    bool naa_enabled = true;
    NaaLattice naa{};
    bool ebl_enabled = true;
    EblLayer ebl{};

    TransportKind transport = TransportKind::gaussian;
    std::optional<std::filesystem::path> range_table;
    BcaParams bca{};
    std::size_t table_ions = 10000;

    SweepConfig sweep{};
    PlConfig pl{};
    std::filesystem::path output_dir = "nvmask-out";

    MaskStack build_mask() const;
    /// The implant window: explicit, else the EBL grid bounding box, else an error.
    Rect resolved_window() const;
    /// Seed, or an Error explaining that runs are never wall-clock seeded.
    std::uint64_t require_seed() const;
};

/// Parses the `key = value` / `[section]` format. Errors cite the source,
/// line number and key. Relative range_table paths resolve against base_dir.
RunConfig parse_config(std::istream& in, const std::string& source = "<config>",
                       const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

enum class Quantity { length_nm, energy_kev, energy_ev, time_us, time_ns, field_gauss, freq_mhz, rate_kcps, none };

/// Parses "10 keV", "2um", "0.5" etc. into the canonical unit of `kind`.
double parse_quantity(const std::string& text, Quantity kind);

} // namespace nvmask
