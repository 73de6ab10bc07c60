#include "nvmask/pipeline.hpp"

#include "nvmask/io.hpp"
#include "nvmask/kdtree.hpp"
#include "nvmask/parallel.hpp"
#include "nvmask/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace nvmask {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

fs::path resolve_output_dir(const RunConfig& config, const RunOptions& options)
{
    if (options.output_dir) return *options.output_dir;
    if (const char* env = std::getenv("NVMASK_OUT_DIR"); env != nullptr && *env != '\0') return env;
    return config.output_dir;
}

TransportModel resolve_transport(const RunConfig& config)
{
    if (config.transport == TransportKind::bca) {
        BcaParams params = config.bca;
        params.rng_seed = config.require_seed();
        return params;
    }
    if (!config.range_table)
        throw Error("missing range table: set transport.range_table (build one with 'nvmask bca') "
                    "or use transport.model = bca");
    return RangeTable::load(config.range_table->string());
}

// ---------------------------------------------------------------------------
// ratio

RatioReport compute_ratio(const RunConfig& config)
{
    RatioReport r;
    r.aperture_diameter_nm = config.naa.aperture_diameter;
    r.wall_width_nm = config.naa.wall_width;
    r.pitch_nm = config.naa.pitch();
    r.ratio = open_area_ratio(config.naa);
    r.dose = config.dose;
    r.effective_dose = effective_dose(config.dose, r.ratio);
    if (config.pl.masked_kcps || config.pl.bare_kcps) {
        if (!config.pl.masked_kcps || !config.pl.bare_kcps)
            throw Error("pl.masked and pl.bare must be given together");
        r.measured_ratio = measured_open_ratio(*config.pl.masked_kcps, *config.pl.bare_kcps);
        r.effective_dose_measured = effective_dose(config.dose, *r.measured_ratio);
    }
    if (config.pl.total_kcps) r.pl_count = estimate_nv_count_from_pl(*config.pl.total_kcps, config.pl.single_nv_kcps);
    return r;
}

namespace {

std::string sci(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace

std::string format_ratio_table(const RatioReport& r)
{
    std::vector<std::pair<std::string, std::string>> rows = {
        {"aperture_diameter_nm", io::format_number(r.aperture_diameter_nm)},
        {"wall_width_nm", io::format_number(r.wall_width_nm)},
        {"pitch_nm", io::format_number(r.pitch_nm)},
        {"open_area_ratio", io::format_fixed(r.ratio, 4)},
        {"dose_per_cm2", sci(r.dose)},
        {"effective_dose_per_cm2", sci(r.effective_dose)},
    };
    if (r.measured_ratio) {
        rows.emplace_back("measured_open_ratio", io::format_fixed(*r.measured_ratio, 4));
        rows.emplace_back("effective_dose_measured_per_cm2", sci(*r.effective_dose_measured));
    }
    if (r.pl_count) {
        rows.emplace_back("pl_nv_count_raw", io::format_number(r.pl_count->raw));
        rows.emplace_back("pl_nv_count", std::to_string(r.pl_count->rounded));
    }
    std::size_t width = 8;
    for (const auto& row : rows) width = std::max(width, row.first.size());
    std::ostringstream out;
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-*s  %s\n", static_cast<int>(width), "quantity", "value");
    out << buf;
    for (const auto& [k, v] : rows) {
        std::snprintf(buf, sizeof buf, "%-*s  %s\n", static_cast<int>(width), k.c_str(), v.c_str());
        out << buf;
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// implant

std::string defects_csv(const ImplantResult& result)
{
    std::string out = std::string(defects_csv_header) + "\n";
    for (const auto& [hole, site] : result.defects) {
        out += std::to_string(hole);
        out += ',' + io::format_number(site.position.x);
        out += ',' + io::format_number(site.position.y);
        out += ',' + io::format_number(site.position.z);
        out += site.kind == DefectKind::nv ? ",NV," : ",N,";
        if (site.orientation) out += axis_name(*site.orientation);
        out += '\n';
    }
    return out;
}

ordered_json spots_json(const ImplantResult& result, const RunConfig& config)
{
    const std::uint64_t seed = config.require_seed();
    long ions = 0, nvs = 0;
    for (const auto& s : result.spots) {
        ions += s.ion_count;
        nvs += s.nv_count;
    }

    ordered_json j;
    j["schema_version"] = schema_version;
    j["seed"] = seed;
    j["energy_keV"] = config.energy_kev;
    j["dose_per_cm2"] = config.dose;
    j["conversion_yield"] = config.conversion_yield;
    j["n_holes"] = result.spots.size();
    j["n_ions"] = ions;
    j["n_nv"] = nvs;
    j["occupancy"] = result.spots.empty() ? std::vector<double>{} : nv_count_distribution(result.spots);

    bool has_pair = false;
    for (const auto& s : result.spots) has_pair = has_pair || s.nv_count >= 2;
    if (has_pair) {
        const T2Distribution t2 = default_t2_distribution();
        j["strong_pair_yield"] = strong_pair_yield(result.spots, t2, seed);
    } else {
        j["strong_pair_yield"] = nullptr;
    }

    ordered_json spots = ordered_json::array();
    for (const auto& s : result.spots) {
        ordered_json e;
        e["hole_ix"] = s.hole_index;
        e["x_nm"] = s.hole_center.x;
        e["y_nm"] = s.hole_center.y;
        e["ion_count"] = s.ion_count;
        e["nv_count"] = s.nv_count;
        if (s.nv_count >= 2) {
            const auto pair = closest_pair(s.nv_sites);
            e["closest_pair"] = {{"r_nm", pair.r_nm},
                                 {"angular_factor", pair.angular_factor},
                                 {"nu_dip_hz", pair.nu_dip_hz}};
        } else {
            e["closest_pair"] = nullptr;
        }
        spots.push_back(std::move(e));
    }
    j["spots"] = std::move(spots);
    return j;
}

ImplantSummary cmd_implant(const RunConfig& config, const RunOptions& options)
{
    ImplantConfig ic;
    ic.energy_kev = config.energy_kev;
    ic.dose = config.dose;
    ic.window = config.resolved_window();
    ic.mask = config.build_mask();
    ic.transport = resolve_transport(config);
    ic.conversion_yield = config.conversion_yield;
    ic.allow_high_yield = config.allow_high_yield;
    ic.rng_seed = config.require_seed();

    ImplantSummary out;
    out.result = run_implant(ic, options.threads);
    if (!out.result.spots.empty()) out.occupancy = nv_count_distribution(out.result.spots);

    const fs::path dir = resolve_output_dir(config, options);
    fs::create_directories(dir);
    out.defects_csv = dir / "defects.csv";
    out.spots_json = dir / "spots.json";
    io::write_file_atomic(out.defects_csv, defects_csv(out.result));
    io::write_file_atomic(out.spots_json, spots_json(out.result, config).dump(2) + "\n");
    return out;
}

// ---------------------------------------------------------------------------
// sweep

namespace {

std::string cell_label(long id, double energy, double hole, bool naa)
{
    return "cell " + std::to_string(id) + " (energy " + io::format_number(energy) + " keV, hole " +
           io::format_number(hole) + " nm, naa " + (naa ? "on" : "off") + ")";
}

std::string cell_stem(long id)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "cell_%03ld", id);
    return buf;
}

double replicate_pitch(const RunConfig& config)
{
    if (const auto* g = std::get_if<EblLayer::Grid>(&config.ebl.holes)) return g->pitch;
    return 2000.0;
}

} // namespace

SweepCell run_sweep_cell(const RunConfig& config, const TransportModel& transport, long cell_id, double energy_kev,
                         double hole_nm, bool naa)
{
    const auto& sw = config.sweep;
    const std::uint64_t seed = config.require_seed();

    EblLayer hole = config.ebl;
    hole.hole_diameter = hole_nm;
    hole.holes = std::vector<Vec2>{{0.0, 0.0}};

    const double pitch = replicate_pitch(config);
    if (pitch < 10.0 * hole_nm) throw Error("replicate hole pitch must be at least ten hole diameters");

    SweepCell cell;
    cell.cell_id = cell_id;
    cell.energy_kev = energy_kev;
    cell.hole_nm = hole_nm;
    cell.naa = naa;

    // replicate holes are laid out on a square grid of this many columns;
    // the worst case is one aperture per hole
    const auto side = static_cast<long>(std::ceil(std::sqrt(static_cast<double>(sw.ions_per_cell))));
    const double R = 0.5 * hole_nm;

    std::vector<Vec3> shifted;
    std::vector<bool> lone; // the only stopped ion of its hole
    std::size_t entered = 0;
    for (long k = 0; entered < sw.ions_per_cell; ++k) {
        Rng rng = substream(seed, Domain::cell, static_cast<std::uint64_t>(cell_id), static_cast<std::uint64_t>(k));

        // where the hole lands on the aperture lattice is random
        NaaLattice lattice = config.naa;
        lattice.offset = {0.0, 0.0};
        const Vec2 a1 = lattice.site_center(1, 0), a2 = lattice.site_center(0, 1);
        const double u = uniform01(rng), v = uniform01(rng);
        lattice.offset = u * a1 + v * a2;

        MaskStack stack;
        if (naa) stack.layers.emplace_back(lattice);
        stack.layers.emplace_back(hole);
        stack.dead_layer_energy_loss = config.dead_layer_kev;

        const auto apertures = apertures_in_hole(lattice, {0.0, 0.0}, hole_nm, Containment::center_inside);
        const std::size_t count = std::min(apertures.size(), sw.ions_per_cell - entered);
        if (count == 0) continue;

        std::vector<Vec2> entries;
        if (naa) {
            // one ion through each aperture, uniform over its open part
            for (std::size_t a = 0; a < count; ++a) {
                const auto [i, j] = lattice.nearest_site(apertures[a]);
                const double r = 0.5 * lattice.site_diameter(i, j);
                const auto one = sample_conditioned_entries(1, apertures[a], r, stack, rng);
                entries.push_back(one.front());
            }
        } else {
            entries = sample_conditioned_entries(count, {0.0, 0.0}, R, stack, rng);
        }
        entered += count;
        ++cell.n_holes;

        const auto ions = implant(entries, energy_kev, stack, transport, rng);
        const auto defects = convert_to_nv(ions, config.conversion_yield, rng);
        for (const auto& d : defects) cell.n_nv += d.kind == DefectKind::nv ? 1 : 0;

        const long slot = cell.n_holes - 1;
        const Vec3 offset{static_cast<double>(slot % side) * pitch, static_cast<double>(slot / side) * pitch, 0.0};
        for (const auto& p : ions) {
            cell.ions.push_back(p);
            shifted.push_back(p + offset);
            lone.push_back(ions.size() == 1);
        }
    }
    cell.n_ions = static_cast<long>(cell.ions.size());
    if (cell.n_ions < 2) throw Error("fewer than two ions stopped in the cell");

    // neighbours in other holes sit a full pitch away, so only within-hole
    // distances survive; ions alone in their hole have no partner
    const auto all = nearest_neighbor_distances(shifted, sw.lateral_only);
    for (std::size_t i = 0; i < all.size(); ++i)
        if (!lone[i]) cell.distances.samples.push_back(all[i]);
    if (cell.distances.samples.empty()) throw Error("no hole kept two stopped ions");
    cell.distances.histogram = Histogram::from_samples(cell.distances.samples, sw.bin_width_nm);
    cell.distances.fwhm = fwhm(cell.distances.histogram);

    std::vector<Vec2> lateral;
    lateral.reserve(cell.ions.size());
    double extent = 0.0;
    for (const auto& p : cell.ions) {
        lateral.push_back({p.x, p.y});
        extent = std::max({extent, std::abs(p.x), std::abs(p.y)});
    }
    const double h = std::holds_alternative<double>(sw.bandwidth) ? std::get<double>(sw.bandwidth)
                                                                  : scott_bandwidth(lateral);
    GridSpec grid;
    const long half_nodes = static_cast<long>(std::ceil((extent + 4.0 * h) / sw.kde_spacing_nm));
    grid.spacing = sw.kde_spacing_nm;
    grid.nx = grid.ny = 2 * half_nodes + 1;
    grid.origin = {-static_cast<double>(half_nodes) * grid.spacing, -static_cast<double>(half_nodes) * grid.spacing};
    cell.density = kde2d(lateral, grid, h);
    return cell;
}

SweepSummary cmd_sweep(const RunConfig& config, const RunOptions& options)
{
    const auto& sw = config.sweep;
    const std::uint64_t seed = config.require_seed();
    const TransportModel transport = resolve_transport(config);

    struct Coord {
        double energy;
        double hole;
        bool naa;
    };
    std::vector<Coord> coords;
    for (double e : sw.energies_kev)
        for (double d : sw.hole_diameters_nm)
            for (bool n : sw.naa) coords.push_back({e, d, n});

    const fs::path dir = resolve_output_dir(config, options);
    const fs::path cell_dir = dir / "cells";
    fs::create_directories(cell_dir);

    SweepSummary summary;
    summary.cells.resize(coords.size());
    parallel_for(coords.size(), options.threads, [&](std::size_t i) {
        const auto& c = coords[i];
        const long id = static_cast<long>(i);
        try {
            SweepCell cell = run_sweep_cell(config, transport, id, c.energy, c.hole, c.naa);
            const std::string stem = cell_stem(id);

            std::ostringstream hist, kde;
            cell.distances.histogram.write_csv(hist);
            cell.density.write_csv(kde);
            io::write_file_atomic(cell_dir / (stem + "_nn_hist.csv"), hist.str());
            io::write_file_atomic(cell_dir / (stem + "_kde.csv"), kde.str());
            if (sw.svg) {
                const std::string title = io::format_number(c.energy) + " keV, " + io::format_number(c.hole) +
                                          " nm hole, NAA " + (c.naa ? "on" : "off");
                std::vector<Vec2> lateral;
                for (const auto& p : cell.ions) lateral.push_back({p.x, p.y});
                const double half = -cell.density.grid.origin.x;
                io::write_file_atomic(cell_dir / (stem + "_kde.svg"), svg::heatmap(cell.density, title));
                io::write_file_atomic(cell_dir / (stem + "_scatter.svg"), svg::scatter(lateral, half, title));
            }
            summary.cells[i] = std::move(cell);
        } catch (const std::exception& e) {
            throw Error("sweep " + cell_label(id, c.energy, c.hole, c.naa) + ": " + e.what());
        }
    });

    std::string table = std::string(sweep_csv_header) + "\n";
    ordered_json meta;
    meta["schema_version"] = schema_version;
    meta["seed"] = seed;
    meta["ions_per_cell"] = sw.ions_per_cell;
    meta["bin_width_nm"] = sw.bin_width_nm;
    meta["lateral_only"] = sw.lateral_only;
    ordered_json cells = ordered_json::array();
    for (const auto& cell : summary.cells) {
        table += std::to_string(cell.cell_id) + ',' + io::format_number(cell.energy_kev) + ',' +
                 io::format_number(cell.hole_nm) + ',' + (cell.naa ? "on" : "off") + ',' +
                 io::format_number(cell.distances.fwhm) + ',' + std::to_string(cell.n_ions) + ',' +
                 std::to_string(cell.n_nv) + '\n';
        ordered_json e;
        e["cell_id"] = cell.cell_id;
        e["energy_keV"] = cell.energy_kev;
        e["hole_nm"] = cell.hole_nm;
        e["naa"] = cell.naa;
        e["n_holes"] = cell.n_holes;
        e["n_ions"] = cell.n_ions;
        e["n_nv"] = cell.n_nv;
        e["nn_samples"] = cell.distances.samples.size();
        e["fwhm_nm"] = cell.distances.fwhm;
        e["kde_bandwidth_nm"] = cell.density.bandwidth;
        e["kde_coverage"] = cell.density.coverage;
        e["kde_coverage_warning"] = cell.density.coverage_warning;
        cells.push_back(std::move(e));
    }
    meta["cells"] = std::move(cells);

    summary.table_csv = dir / "sweep.csv";
    io::write_file_atomic(summary.table_csv, table);
    io::write_file_atomic(dir / "sweep.json", meta.dump(2) + "\n");
    return summary;
}

// ---------------------------------------------------------------------------
// range tables and traces

RangeTable cmd_bca(const std::vector<double>& energies_kev, std::size_t n_ions, const BcaParams& params,
                   unsigned threads, const fs::path& out_csv)
{
    const RangeTable table = build_range_table(energies_kev, n_ions, params, threads);
    if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
    table.save(out_csv.string());
    return table;
}

namespace {

std::vector<double> column(const io::CsvTable& t, std::size_t c)
{
    std::vector<double> v;
    v.reserve(t.rows.size());
    for (const auto& row : t.rows) v.push_back(row[c]);
    return v;
}

bool has_column(const io::CsvTable& t, const std::string& name)
{
    return std::find(t.header.begin(), t.header.end(), name) != t.header.end();
}

} // namespace

G2Trace read_g2_csv(const fs::path& path)
{
    const auto t = io::read_numeric_csv_file(path, {"t_ns", "g2"});
    G2Trace trace;
    trace.t_ns = column(t, 0);
    trace.g2 = column(t, 1);
    if (has_column(t, "sigma")) trace.sigma = column(t, t.column("sigma"));
    return trace;
}

EchoTrace read_echo_csv(const fs::path& path)
{
    const auto t = io::read_numeric_csv_file(path, {"t_us", "coherence"});
    return {column(t, 0), column(t, 1)};
}

OdmrSpectrum read_odmr_csv(const fs::path& path)
{
    const auto t = io::read_numeric_csv_file(path, {"f_mhz", "contrast"});
    return {column(t, 0), column(t, 1)};
}

ordered_json cmd_fit_g2(const fs::path& trace_csv, std::uint64_t seed)
{
    const G2Trace trace = read_g2_csv(trace_csv);
    const G2Fit fit = fit_g2(trace, seed);
    ordered_json j;
    j["schema_version"] = schema_version;
    j["n_bins"] = trace.t_ns.size();
    j["g2_0"] = fit.g2_0;
    j["amplitude"] = fit.amplitude;
    j["tau1_ns"] = fit.tau1_ns;
    j["tau2_ns"] = fit.tau2_ns;
    j["bunching"] = fit.bunching;
    j["residual"] = fit.residual;
    j["starts"] = fit.starts;
    j["emitters"] = to_string(count_emitters(std::max(0.0, fit.g2_0)));
    return j;
}

ordered_json cmd_fit_echo(const fs::path& trace_csv)
{
    const EchoTrace trace = read_echo_csv(trace_csv);
    const EchoFit fit = fit_hahn_echo(trace);
    ordered_json j;
    j["schema_version"] = schema_version;
    j["n_points"] = trace.t_us.size();
    j["t2_us"] = fit.t2_us;
    j["stretch"] = fit.stretch;
    j["amplitude"] = fit.amplitude;
    j["offset"] = fit.offset;
    j["residual"] = fit.residual;
    return j;
}

ordered_json cmd_count_odmr(const fs::path& spectrum_csv, double prominence, double min_separation_mhz)
{
    const OdmrSpectrum spectrum = read_odmr_csv(spectrum_csv);
    const DipCount dips = count_odmr_dips(spectrum, prominence, min_separation_mhz);
    ordered_json j;
    j["schema_version"] = schema_version;
    j["prominence"] = prominence;
    j["min_separation_mhz"] = min_separation_mhz;
    j["dip_count"] = dips.dip_count;
    j["nv_estimate"] = dips.nv_estimate;
    j["dip_frequencies_mhz"] = dips.dip_frequencies_mhz;
    return j;
}

} // namespace nvmask
