// Command-line front end: one subcommand per pipeline stage.

#include "nvmask/config.hpp"
#include "nvmask/io.hpp"
#include "nvmask/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

using nvmask::RunConfig;
using nvmask::RunOptions;

void report_error(const std::string& command, const std::string& message)
{
    nlohmann::ordered_json j;
    j["level"] = "error";
    j["command"] = command;
    j["message"] = message;
    std::cerr << j.dump() << '\n';
}

void emit_json(const nlohmann::ordered_json& j, const std::string& out)
{
    const std::string text = j.dump(2) + "\n";
    if (out.empty()) std::cout << text;
    else nvmask::io::write_file_atomic(out, text);
}

RunConfig load_or_default(const std::string& path)
{
    return path.empty() ? RunConfig{} : nvmask::load_config(path);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"nvmask: masked ion implantation and NV placement statistics"};
    app.require_subcommand(1);

    unsigned threads = 0;
    app.add_option("--threads", threads, "Worker threads (0 = all cores); results do not depend on it")
        ->capture_default_str();

    std::string config_path, out_path;
    std::optional<std::uint64_t> seed;

    // ratio
    auto* ratio = app.add_subcommand("ratio", "Open-area ratio, effective dose and PL ratios");
    std::optional<double> da, wd, dose, pl_masked, pl_bare, pl_total, single_nv;
    ratio->add_option("--config", config_path, "Run config")->check(CLI::ExistingFile);
    ratio->add_option("--da", da, "Aperture diameter (nm)");
    ratio->add_option("--wd", wd, "Wall width (nm)");
    ratio->add_option("--dose", dose, "Nominal dose (ions/cm^2)");
    ratio->add_option("--pl-masked", pl_masked, "PL of the masked sample (kcps)");
    ratio->add_option("--pl-bare", pl_bare, "PL of the bare reference (kcps)");
    ratio->add_option("--pl-total", pl_total, "Total PL of one spot (kcps)");
    ratio->add_option("--single-nv", single_nv, "PL of a single NV (kcps)");

    // implant
    auto* implant = app.add_subcommand("implant", "Dose-driven implant run: defects.csv and spots.json");
    implant->add_option("--config", config_path, "Run config")->required()->check(CLI::ExistingFile);
    implant->add_option("--seed", seed, "RNG seed (overrides the config)");
    implant->add_option("--out", out_path, "Output directory (overrides NVMASK_OUT_DIR and the config)");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Energy x hole size x NAA sweep of nearest-neighbour statistics");
    bool svg = false;
    sweep->add_option("--config", config_path, "Run config")->required()->check(CLI::ExistingFile);
    sweep->add_option("--seed", seed, "RNG seed (overrides the config)");
    sweep->add_option("--out", out_path, "Output directory (overrides NVMASK_OUT_DIR and the config)");
    sweep->add_flag("--svg", svg, "Also write SVG heatmaps and scatter plots");

    // bca
    auto* bca = app.add_subcommand("bca", "Build a range table by BCA transport");
    std::vector<double> energies;
    std::size_t n_ions = 10000;
    double stop_energy = 16.0;
    std::string electronic = "lindhard_scharff";
    std::optional<double> density;
    bca->add_option("--energies", energies, "Energies (keV)")->required()->delimiter(',');
    bca->add_option("--ions", n_ions, "Ions per energy")->capture_default_str();
    bca->add_option("--seed", seed, "RNG seed")->required();
    bca->add_option("--stop-energy", stop_energy, "Cutoff energy (eV)")->capture_default_str();
    bca->add_option("--electronic", electronic, "lindhard_scharff or off")->capture_default_str();
    bca->add_option("--density", density, "Carbon mass density (g/cm^3); default diamond");
    bca->add_option("--out", out_path, "Output CSV")->required();

    // traces
    std::string trace;
    auto* fit_g2 = app.add_subcommand("fit-g2", "Fit a g2(t) trace (t_ns,g2[,sigma]) and count emitters");
    fit_g2->add_option("trace", trace, "CSV file")->required()->check(CLI::ExistingFile);
    fit_g2->add_option("--seed", seed, "Seed for the random restarts (default 0)");
    fit_g2->add_option("--out", out_path, "JSON output (default stdout)");

    auto* fit_echo = app.add_subcommand("fit-echo", "Fit a Hahn-echo decay (t_us,coherence)");
    fit_echo->add_option("trace", trace, "CSV file")->required()->check(CLI::ExistingFile);
    fit_echo->add_option("--out", out_path, "JSON output (default stdout)");

    auto* odmr = app.add_subcommand("count-odmr", "Count ODMR dips (f_mhz,contrast)");
    double prominence = 0.01, min_sep = 5.0;
    odmr->add_option("spectrum", trace, "CSV file")->required()->check(CLI::ExistingFile);
    odmr->add_option("--prominence", prominence, "Minimum dip prominence (contrast units)")->capture_default_str();
    odmr->add_option("--min-separation", min_sep, "Minimum dip separation (MHz)")->capture_default_str();
    odmr->add_option("--out", out_path, "JSON output (default stdout)");

    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().front()->get_name();
    RunOptions options;
    options.threads = threads;
    if (!out_path.empty()) options.output_dir = out_path;

    try {
        if (command == "ratio") {
            RunConfig config = load_or_default(config_path);
            if (da) config.naa.aperture_diameter = *da;
            if (wd) config.naa.wall_width = *wd;
            if (dose) config.dose = *dose;
            if (pl_masked) config.pl.masked_kcps = *pl_masked;
            if (pl_bare) config.pl.bare_kcps = *pl_bare;
            if (pl_total) config.pl.total_kcps = *pl_total;
            if (single_nv) config.pl.single_nv_kcps = *single_nv;
            std::cout << nvmask::format_ratio_table(nvmask::compute_ratio(config));
        } else if (command == "implant") {
            RunConfig config = nvmask::load_config(config_path);
            if (seed) config.seed = *seed;
            const auto summary = nvmask::cmd_implant(config, options);
            std::cout << "wrote " << summary.defects_csv.string() << " and " << summary.spots_json.string() << '\n';
        } else if (command == "sweep") {
            RunConfig config = nvmask::load_config(config_path);
            if (seed) config.seed = *seed;
            if (svg) config.sweep.svg = true;
            const auto summary = nvmask::cmd_sweep(config, options);
            std::cout << "wrote " << summary.table_csv.string() << " (" << summary.cells.size() << " cells)\n";
        } else if (command == "bca") {
            nvmask::BcaParams params;
            params.rng_seed = *seed;
            params.stop_energy = stop_energy;
            params.electronic = nvmask::parse_electronic_stopping(electronic);
            if (density) params.target = nvmask::TargetMaterial::carbon(*density);
            nvmask::cmd_bca(energies, n_ions, params, threads, out_path);
            std::cout << "wrote " << out_path << '\n';
        } else if (command == "fit-g2") {
            emit_json(nvmask::cmd_fit_g2(trace, seed.value_or(0)), out_path);
        } else if (command == "fit-echo") {
            emit_json(nvmask::cmd_fit_echo(trace), out_path);
        } else if (command == "count-odmr") {
            emit_json(nvmask::cmd_count_odmr(trace, prominence, min_sep), out_path);
        }
    } catch (const std::exception& e) {
        report_error(command, e.what());
        return 1;
    }
    return 0;
}
