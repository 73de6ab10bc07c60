#include "oracles.hpp"

#include "nvmask/config.hpp"
#include "nvmask/io.hpp"
#include "nvmask/pipeline.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

using namespace nvmask;
namespace fs = std::filesystem;

// fixed-seed regression outputs of the CLI commands
constexpr long IMPLANT_N_IONS = 3162;
constexpr long IMPLANT_N_NV = 92;
constexpr double SWEEP_FWHM_0 = 4.1916666666666664;
constexpr double BCA_RP_1KEV = 2.4171849913717067;
constexpr double FIT_G2_0 = 0.49222001323514875;
constexpr double FIT_ECHO_T2 = 4.4714243516403869;

namespace {

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void spit(const fs::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::string error_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

bool contains(const std::string& haystack, const std::string& needle)
{
    return haystack.find(needle) != std::string::npos;
}

/// Scratch directory removed on scope exit.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
        : path(fs::temp_directory_path() / ("nvmask_test_" + tag + "_" + std::to_string(::getpid())))
    {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_table(const fs::path& p)
{
    spit(p, "energy_keV,rp_nm,drp_nm,drlat_nm\n2.5,5.17,2.5,2.14\n10,19.5,8.56,7.3\n");
}

} // namespace

TEST_CASE("quantities with units")
{
    CHECK(parse_quantity("10 keV", Quantity::energy_kev) == 10.0);
    CHECK(parse_quantity("500eV", Quantity::energy_kev) == 0.5);
    CHECK(parse_quantity("2um", Quantity::length_nm) == 2000.0);
    CHECK(parse_quantity("48 A", Quantity::length_nm) == doctest::Approx(4.8).epsilon(1e-15));
    CHECK(parse_quantity("0.5", Quantity::length_nm) == 0.5);
    CHECK(parse_quantity("1 mT", Quantity::field_gauss) == 10.0);
    CHECK(parse_quantity("20 ns", Quantity::time_us) == doctest::Approx(0.02).epsilon(1e-15));
    CHECK(parse_quantity("4e13", Quantity::none) == 4e13);
    CHECK(contains(error_of([] { parse_quantity("10 ns", Quantity::length_nm); }), "unknown unit 'ns'"));
    CHECK_THROWS_AS(parse_quantity("ten", Quantity::length_nm), Error);
    CHECK_THROWS_AS(parse_quantity("", Quantity::length_nm), Error);
    CHECK_THROWS_AS(parse_quantity("3 nm", Quantity::none), Error);
}

TEST_CASE("config parsing")
{
    std::istringstream in(R"(# nominal NAA geometry
seed = 42
[implant]
energy = 2.5 keV
dose = 4e13
window = 0 0 4um 4um
conversion_yield = 0.004
[naa]
aperture_diameter = 5.87 nm
wall_width = 48 A     # trailing comment
[ebl]
hole_diameter = 32.23
nx = 3
ny = 2
pitch = 2 um
[transport]
model = bca
stop_energy = 20 eV
[sweep]
energies = 2.5, 10
hole_diameters = 18 27 41
naa = on, off
ions_per_cell = 500
bandwidth = 1.5 nm
[output]
dir = out
)");
    const RunConfig c = parse_config(in);
    CHECK(c.seed == 42u);
    CHECK(c.energy_kev == 2.5);
    CHECK(c.dose == 4e13);
    REQUIRE(c.window);
    CHECK(c.window->x1 == 4000.0);
    CHECK(c.naa.wall_width == doctest::Approx(4.8).epsilon(1e-15));
    CHECK(std::get<EblLayer::Grid>(c.ebl.holes).nx == 3);
    CHECK(std::get<EblLayer::Grid>(c.ebl.holes).pitch == 2000.0);
    CHECK(c.transport == TransportKind::bca);
    CHECK(c.bca.stop_energy == 20.0);
    CHECK(c.sweep.energies_kev == std::vector<double>{2.5, 10.0});
    CHECK(c.sweep.hole_diameters_nm == std::vector<double>{18.0, 27.0, 41.0});
    CHECK(c.sweep.naa == std::vector<bool>{true, false});
    CHECK(std::get<double>(c.sweep.bandwidth) == 1.5);
    CHECK(c.output_dir == fs::path("out"));
    CHECK(c.require_seed() == 42u);

    const MaskStack m = c.build_mask();
    CHECK(m.layers.size() == 2);
    REQUIRE(m.naa());
    CHECK(m.naa()->pitch() == doctest::Approx(10.67).epsilon(1e-14));
}

TEST_CASE("config errors cite line and key")
{
    auto fails = [](const std::string& text) {
        std::istringstream in(text);
        return error_of([&] { parse_config(in, "run.cfg"); });
    };
    CHECK(contains(fails("seed = 1\n[naa]\nwall_width = -\n"), "run.cfg:3: key 'naa.wall_width'"));
    CHECK(contains(fails("[naa]\nwall = 3\n"), "run.cfg:2: unknown key 'naa.wall'"));
    CHECK(contains(fails("[lasers]\n"), "run.cfg:1: unknown section [lasers]"));
    CHECK(contains(fails("seed = 1\nseed = 2\n"), "run.cfg:2: duplicate key 'seed'"));
    CHECK(contains(fails("[implant]\nenergy =\n"), "run.cfg:2: key 'implant.energy' has no value"));
    CHECK(contains(fails("[implant]\nenergy 10\n"), "run.cfg:2: expected 'key = value'"));
    CHECK(contains(fails("[transport]\nmodel = srim\n"), "expected 'gaussian' or 'bca'"));
    CHECK(contains(fails("[transport]\nrange_table = /nonexistent/t.csv\n"), "does not exist"));
    CHECK(contains(fails("[sweep]\nions_per_cell = 1\n"), "ions_per_cell"));

    RunConfig unseeded;
    CHECK(contains(error_of([&] { unseeded.require_seed(); }), "never clock-seeded"));
}

TEST_CASE("relative range tables resolve against the config file")
{
    TempDir tmp("cfg");
    fs::create_directories(tmp.path / "sub");
    write_table(tmp.path / "sub" / "t.csv");
    spit(tmp.path / "sub" / "run.cfg", "seed = 1\n[transport]\nrange_table = t.csv\n");
    const RunConfig c = load_config(tmp.path / "sub" / "run.cfg");
    REQUIRE(c.range_table);
    CHECK(fs::equivalent(*c.range_table, tmp.path / "sub" / "t.csv"));
    CHECK(std::holds_alternative<RangeTable>(resolve_transport(c)));

    RunConfig no_table;
    CHECK(contains(error_of([&] { resolve_transport(no_table); }), "missing range table"));
}

TEST_CASE("window defaults to the EBL grid")
{
    RunConfig c;
    c.ebl.holes = EblLayer::Grid{1000.0, 3, 2, {10.0, 20.0}};
    const Rect w = c.resolved_window();
    CHECK(w.x0 == -490.0);
    CHECK(w.y0 == -480.0);
    CHECK(w.x1 == 2510.0);
    CHECK(w.y1 == 1520.0);
    c.ebl_enabled = false;
    CHECK_THROWS_AS(c.resolved_window(), Error);
}

TEST_CASE("numeric CSV reader")
{
    std::istringstream good("t_ns,g2,sigma\n-1,0.5,0.1\n1,0.5,0.1\n");
    const auto t = io::read_numeric_csv(good, {"t_ns", "g2"}, "g.csv");
    CHECK(t.rows.size() == 2);
    CHECK(t.column("sigma") == 2);

    std::istringstream wrong_header("time,g2\n1,2\n");
    CHECK(contains(error_of([&] { io::read_numeric_csv(wrong_header, {"t_ns", "g2"}, "g.csv"); }), "g.csv"));
    std::istringstream ragged("t_ns,g2\n1,2\n3\n");
    CHECK(contains(error_of([&] { io::read_numeric_csv(ragged, {"t_ns", "g2"}, "g.csv"); }), "g.csv:3"));

    for (double v : {0.1, 1.0 / 3.0, 4e13, -2.5e-9, 19.5})
        CHECK(std::stod(io::format_number(v)) == v);
}

TEST_CASE("implant output files")
{
    TempDir tmp("implant");
    write_table(tmp.path / "t.csv");
    RunConfig c;
    c.seed = 5;
    c.range_table = tmp.path / "t.csv";
    c.ebl.holes = EblLayer::Grid{2000.0, 8, 8, {}};
    c.conversion_yield = 0.02;

    RunOptions o;
    o.output_dir = tmp.path / "a";
    const auto s = cmd_implant(c, o);
    const std::string csv = slurp(s.defects_csv);
    CHECK(csv.rfind(std::string(defects_csv_header) + "\n", 0) == 0);
    const auto j = nlohmann::json::parse(slurp(s.spots_json));
    CHECK(j["schema_version"] == schema_version);
    CHECK(j["seed"] == 5);
    CHECK(j["n_holes"] == 64);
    CHECK(j["spots"].size() == 64);
    long lines = std::count(csv.begin(), csv.end(), '\n') - 1;
    CHECK(lines == j["n_ions"].get<long>());

    // rerunning overwrites identical bytes
    const auto again = cmd_implant(c, o);
    CHECK(slurp(again.defects_csv) == csv);

    c.dose = 0.0;
    o.output_dir = tmp.path / "zero";
    CHECK(slurp(cmd_implant(c, o).defects_csv) == std::string(defects_csv_header) + "\n");
}

TEST_CASE("sweep cells are pure functions of the seed")
{
    TempDir tmp("sweep");
    write_table(tmp.path / "t.csv");
    RunConfig c;
    c.seed = 3;
    c.range_table = tmp.path / "t.csv";
    const auto transport = resolve_transport(c);
    c.sweep.ions_per_cell = 400;
    const auto a = run_sweep_cell(c, transport, 2, 2.5, 18.0, true);
    const auto b = run_sweep_cell(c, transport, 2, 2.5, 18.0, true);
    CHECK(a.distances.samples == b.distances.samples);
    CHECK(a.n_ions >= 400);
    CHECK(a.distances.histogram.total() == static_cast<long>(a.distances.samples.size()));
    double mass = 0.0;
    for (double v : a.density.values) mass += v;
    CHECK(mass * a.density.grid.cell_area() == doctest::Approx(1.0).epsilon(1e-3));

    c.sweep.energies_kev = {1.0};
    c.sweep.hole_diameters_nm = {18.0};
    c.sweep.naa = {true};
    RunOptions o;
    o.output_dir = tmp.path / "out";
    const std::string e = error_of([&] { cmd_sweep(c, o); });
    CHECK(contains(e, "sweep cell 0 (energy 1 keV, hole 18 nm, naa on)"));
    CHECK(contains(e, "minimum of 2.5 keV"));
}

#ifdef NVMASK_CLI_PATH

namespace {

struct CliResult {
    int status = -1;
    std::string out, err;
};

CliResult run_cli(const std::string& args, const fs::path& dir)
{
    const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = std::string("\"") + NVMASK_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                            err.string() + "\"";
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

} // namespace

TEST_CASE("cli: ratio")
{
    TempDir tmp("cli_ratio");
    auto r = run_cli("ratio", tmp.path);
    CHECK(r.status == 0);
    CHECK(contains(r.out, "open_area_ratio         0.2745"));
    CHECK(contains(run_cli("ratio --wd 0", tmp.path).out, "0.9069"));
    r = run_cli("ratio --dose 4e13 --pl-masked 26.4 --pl-bare 100", tmp.path);
    CHECK(contains(r.out, "measured_open_ratio              0.2640"));
    CHECK(contains(r.out, "effective_dose_measured_per_cm2  1.056e+13"));

    spit(tmp.path / "bad.cfg", "[naa]\nwall_width = thick\n");
    r = run_cli("ratio --config " + (tmp.path / "bad.cfg").string(), tmp.path);
    CHECK(r.status == 1);
    const auto j = nlohmann::json::parse(r.err);
    CHECK(j["level"] == "error");
    CHECK(j["command"] == "ratio");
    CHECK(contains(j["message"].get<std::string>(), "bad.cfg:2: key 'naa.wall_width'"));

    CHECK(run_cli("ratio --wd -7", tmp.path).status == 1);
}

TEST_CASE("cli: implant")
{
    TempDir tmp("cli_implant");
    write_table(tmp.path / "t.csv");
    spit(tmp.path / "run.cfg",
         "seed = 9\n[implant]\nconversion_yield = 0.03\n[ebl]\nnx = 6\nny = 6\n[transport]\nrange_table = t.csv\n");
    auto r = run_cli("implant --config " + (tmp.path / "run.cfg").string() + " --out " + (tmp.path / "o").string(),
                     tmp.path);
    REQUIRE(r.status == 0);
    const auto j = nlohmann::json::parse(slurp(tmp.path / "o" / "spots.json"));
    // fixed-seed regression
    CHECK(j["n_ions"] == IMPLANT_N_IONS);
    CHECK(j["n_nv"] == IMPLANT_N_NV);

    spit(tmp.path / "nt.cfg", "seed = 9\n");
    r = run_cli("implant --config " + (tmp.path / "nt.cfg").string(), tmp.path);
    CHECK(r.status == 1);
    CHECK(contains(r.err, "missing range table"));

    spit(tmp.path / "low.cfg", "seed = 9\n[implant]\nenergy = 1 keV\n[transport]\nrange_table = t.csv\n");
    r = run_cli("implant --config " + (tmp.path / "low.cfg").string() + " --out " + (tmp.path / "p").string(),
                tmp.path);
    CHECK(r.status == 1);
    CHECK(contains(r.err, "below the range table minimum of 2.5 keV"));

    spit(tmp.path / "unseeded.cfg", "[transport]\nrange_table = t.csv\n");
    r = run_cli("implant --config " + (tmp.path / "unseeded.cfg").string(), tmp.path);
    CHECK(r.status == 1);
    CHECK(contains(r.err, "no seed given"));
}

TEST_CASE("cli: sweep")
{
    TempDir tmp("cli_sweep");
    write_table(tmp.path / "t.csv");
    spit(tmp.path / "run.cfg", "seed = 4\n[transport]\nrange_table = t.csv\n[sweep]\nenergies = 2.5\n"
                               "hole_diameters = 27\nions_per_cell = 300\n");
    auto r = run_cli("sweep --svg --config " + (tmp.path / "run.cfg").string() + " --out " +
                         (tmp.path / "o").string(),
                     tmp.path);
    REQUIRE(r.status == 0);
    const std::string table = slurp(tmp.path / "o" / "sweep.csv");
    CHECK(table.rfind(std::string(sweep_csv_header) + "\n", 0) == 0);
    CHECK(std::count(table.begin(), table.end(), '\n') == 3);
    CHECK(fs::exists(tmp.path / "o" / "cells" / "cell_000_kde.svg"));
    const auto j = nlohmann::json::parse(slurp(tmp.path / "o" / "sweep.json"));
    CHECK(j["cells"][0]["fwhm_nm"].get<double>() == doctest::Approx(SWEEP_FWHM_0).epsilon(1e-12));

    spit(tmp.path / "low.cfg", "seed = 4\n[transport]\nrange_table = t.csv\n[sweep]\nenergies = 1\n");
    r = run_cli("sweep --config " + (tmp.path / "low.cfg").string() + " --out " + (tmp.path / "p").string(),
                tmp.path);
    CHECK(r.status == 1);
    CHECK(contains(r.err, "energy 1 keV"));
    CHECK(contains(r.err, "minimum of 2.5 keV"));
}

TEST_CASE("cli: bca")
{
    TempDir tmp("cli_bca");
    auto r = run_cli("bca --energies 1,2 --ions 1000 --seed 3 --out " + (tmp.path / "t.csv").string(), tmp.path);
    REQUIRE(r.status == 0);
    const RangeTable t = RangeTable::load((tmp.path / "t.csv").string());
    REQUIRE(t.rows().size() == 2);
    CHECK(t.rows()[0].rp_nm == doctest::Approx(BCA_RP_1KEV).epsilon(1e-12));

    r = run_cli("bca --energies 0.02 --ions 1000 --seed 3 --out " + (tmp.path / "u.csv").string(), tmp.path);
    CHECK(r.status == 1);
    CHECK(contains(r.err, "\"command\":\"bca\""));
    r = run_cli("bca --energies 1 --ions 10 --seed 3 --out " + (tmp.path / "u.csv").string(), tmp.path);
    CHECK(r.status == 1);
}

TEST_CASE("cli: trace commands")
{
    TempDir tmp("cli_traces");
    Rng rng = substream(1, Domain::synth, 0);

    const auto g2 = oracle::synth_g2(2.0, 12.0, 150.0, 0.5, 300.0, 0.5, 0.03, &rng);
    std::string csv = "t_ns,g2\n";
    for (std::size_t i = 0; i < g2.t_ns.size(); ++i) csv += io::format_number(g2.t_ns[i]) + "," + io::format_number(g2.g2[i]) + "\n";
    spit(tmp.path / "g2.csv", csv);
    auto r = run_cli("fit-g2 " + (tmp.path / "g2.csv").string() + " --seed 2", tmp.path);
    REQUIRE(r.status == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["g2_0"].get<double>() == doctest::Approx(FIT_G2_0).epsilon(1e-9));
    CHECK(j["n_bins"] == g2.t_ns.size());

    const auto echo = oracle::synth_echo(4.5, 1.5, 1.0, 0.0, 20.0, 101, 0.02, &rng);
    csv = "t_us,coherence\n";
    for (std::size_t i = 0; i < echo.t_us.size(); ++i)
        csv += io::format_number(echo.t_us[i]) + "," + io::format_number(echo.coherence[i]) + "\n";
    spit(tmp.path / "echo.csv", csv);
    r = run_cli("fit-echo " + (tmp.path / "echo.csv").string() + " --out " + (tmp.path / "echo.json").string(),
                tmp.path);
    REQUIRE(r.status == 0);
    j = nlohmann::json::parse(slurp(tmp.path / "echo.json"));
    CHECK(j["t2_us"].get<double>() == doctest::Approx(FIT_ECHO_T2).epsilon(1e-9));

    const auto odmr = synth_odmr({NvAxis::a111, NvAxis::a1bb}, {60.0, 25.0, 110.0}, 4.0, 0.1);
    csv = "f_mhz,contrast\n";
    for (std::size_t i = 0; i < odmr.f_mhz.size(); ++i)
        csv += io::format_number(odmr.f_mhz[i]) + "," + io::format_number(odmr.contrast[i]) + "\n";
    spit(tmp.path / "odmr.csv", csv);
    r = run_cli("count-odmr " + (tmp.path / "odmr.csv").string(), tmp.path);
    REQUIRE(r.status == 0);
    j = nlohmann::json::parse(r.out);
    CHECK(j["dip_count"] == 4);
    CHECK(j["nv_estimate"] == 2);

    // one malformed file per command
    spit(tmp.path / "bad.csv", "t_ns,g2\n1,0.5\n2,oops\n");
    r = run_cli("fit-g2 " + (tmp.path / "bad.csv").string(), tmp.path);
    CHECK(r.status == 1);
    CHECK(contains(r.err, "bad.csv:3"));
    spit(tmp.path / "bad_echo.csv", "time,coherence\n0,1\n");
    r = run_cli("fit-echo " + (tmp.path / "bad_echo.csv").string(), tmp.path);
    CHECK(r.status == 1);
    CHECK(contains(r.err, "t_us"));
    spit(tmp.path / "bad_odmr.csv", "f_mhz,contrast\n2870\n");
    r = run_cli("count-odmr " + (tmp.path / "bad_odmr.csv").string(), tmp.path);
    CHECK(r.status == 1);
    CHECK(contains(r.err, "bad_odmr.csv:2"));
}

#endif
