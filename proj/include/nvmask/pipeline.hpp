#pragma once

#include "nvmask/config.hpp"
#include "nvmask/implant_sim.hpp"
#include "nvmask/range_table.hpp"
#include "nvmask/spatial_stats.hpp"
#include "nvmask/spin_analysis.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace nvmask {

/// Bumped whenever a JSON output changes shape.
inline constexpr int schema_version = 1;

struct RunOptions {
    unsigned threads = 1;
    /// Overrides the config (and NVMASK_OUT_DIR) when set.
    std::optional<std::filesystem::path> output_dir;
};

/// --out, then NVMASK_OUT_DIR, then the config's output.dir.
std::filesystem::path resolve_output_dir(const RunConfig& config, const RunOptions& options);

/// Gaussian model from the configured table file, or BCA parameters carrying
/// the run seed. Throws Error when the gaussian model has no table.
TransportModel resolve_transport(const RunConfig& config);

// ---------------------------------------------------------------------------
// ratio

struct RatioReport {
    double aperture_diameter_nm = 0.0;
    double wall_width_nm = 0.0;
    double pitch_nm = 0.0;
    double ratio = 0.0;
    double dose = 0.0;
    double effective_dose = 0.0;
    std::optional<double> measured_ratio;
    std::optional<double> effective_dose_measured;
    std::optional<PlCountEstimate> pl_count;
};

RatioReport compute_ratio(const RunConfig& config);
/// Two-column `quantity value` table.
std::string format_ratio_table(const RatioReport& report);

// ---------------------------------------------------------------------------
// implant

struct ImplantSummary {
    ImplantResult result;
    std::vector<double> occupancy; // P(N)
    std::filesystem::path defects_csv;
    std::filesystem::path spots_json;
};

inline constexpr const char* defects_csv_header = "hole_ix,x_nm,y_nm,z_nm,kind,axis";

std::string defects_csv(const ImplantResult& result);
nlohmann::ordered_json spots_json(const ImplantResult& result, const RunConfig& config);

/// Runs the implant chain and writes defects.csv and spots.json.
ImplantSummary cmd_implant(const RunConfig& config, const RunOptions& options = {});

// ---------------------------------------------------------------------------
// sweep

struct SweepCell {
    long cell_id = 0;
    double energy_kev = 0.0;
    double hole_nm = 0.0;
    bool naa = false;
    DistanceDistribution distances;
    DensityGrid density;
    long n_ions = 0;
    long n_nv = 0;
    long n_holes = 0;
    std::vector<Vec3> ions; // hole-local coordinates
};

inline constexpr const char* sweep_csv_header = "cell_id,energy_keV,hole_nm,naa,fwhm_nm,n_ions,n_nv";

/// One cell of replicate holes, each dropped at a random offset on the NAA
/// lattice. With NAAs every aperture whose center lies in the hole passes one
/// ion; without, the same number of ions enters uniformly over the hole.
/// Holes are added until ions_per_cell ions have entered. Nearest-neighbour
/// distances are taken within each hole. Pure function of (config, cell id).
SweepCell run_sweep_cell(const RunConfig& config, const TransportModel& transport, long cell_id, double energy_kev,
                         double hole_nm, bool naa);

struct SweepSummary {
    std::vector<SweepCell> cells;
    std::filesystem::path table_csv;
};

/// Every cell of energies x hole diameters x NAA on/off, run in parallel.
/// A failing cell aborts the sweep with an Error naming its coordinates.
SweepSummary cmd_sweep(const RunConfig& config, const RunOptions& options = {});

// ---------------------------------------------------------------------------
// range tables and trace analysis

/// Builds and writes a BCA range table.
RangeTable cmd_bca(const std::vector<double>& energies_kev, std::size_t n_ions, const BcaParams& params,
                   unsigned threads, const std::filesystem::path& out_csv);

G2Trace read_g2_csv(const std::filesystem::path& path);
EchoTrace read_echo_csv(const std::filesystem::path& path);
OdmrSpectrum read_odmr_csv(const std::filesystem::path& path);

nlohmann::ordered_json cmd_fit_g2(const std::filesystem::path& trace_csv, std::uint64_t seed);
nlohmann::ordered_json cmd_fit_echo(const std::filesystem::path& trace_csv);
nlohmann::ordered_json cmd_count_odmr(const std::filesystem::path& spectrum_csv, double prominence,
                                      double min_separation_mhz);

} // namespace nvmask
