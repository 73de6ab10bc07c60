#include "nvmask/config.hpp"

#include "nvmask/io.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <set>

namespace nvmask {

namespace {

struct UnitScale {
    const char* name;
    double scale;
};

std::vector<UnitScale> units_for(Quantity kind)
{
    switch (kind) {
    case Quantity::length_nm: return {{"nm", 1.0}, {"um", 1e3}, {"\xce\xbcm", 1e3}, {"A", 0.1}};
    case Quantity::energy_kev: return {{"keV", 1.0}, {"eV", 1e-3}, {"MeV", 1e3}};
    case Quantity::energy_ev: return {{"eV", 1.0}, {"keV", 1e3}};
    case Quantity::time_us: return {{"us", 1.0}, {"\xce\xbcs", 1.0}, {"ns", 1e-3}, {"ms", 1e3}};
    case Quantity::time_ns: return {{"ns", 1.0}, {"us", 1e3}, {"\xce\xbcs", 1e3}};
    case Quantity::field_gauss: return {{"G", 1.0}, {"mT", 10.0}, {"T", 1e4}};
    case Quantity::freq_mhz: return {{"MHz", 1.0}, {"kHz", 1e-3}, {"GHz", 1e3}};
    case Quantity::rate_kcps: return {{"kcps", 1.0}, {"cps", 1e-3}};
    case Quantity::none: return {};
    }
    return {};
}

double parse_number(const std::string& s)
{
    if (s.empty()) throw Error("expected a number");
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v))
        throw Error("'" + s + "' is not a finite number");
    return v;
}

std::vector<std::string> list_items(const std::string& value)
{
    std::vector<std::string> items;
    std::string cur;
    for (char c : value) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty()) items.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) items.push_back(cur);
    return items;
}

bool is_unit(const std::string& token, Quantity kind)
{
    for (const auto& u : units_for(kind))
        if (token == u.name) return true;
    return false;
}

/// Numbers with optional attached units; a bare trailing unit token applies
/// to every item lacking its own.
std::vector<double> parse_quantity_list(const std::string& value, Quantity kind)
{
    auto items = list_items(value);
    std::string trailing;
    if (!items.empty() && is_unit(items.back(), kind)) {
        trailing = items.back();
        items.pop_back();
    }
    if (items.empty()) throw Error("expected at least one value");
    std::vector<double> out;
    for (const auto& item : items) {
        const bool has_unit = !item.empty() && (std::isalpha(static_cast<unsigned char>(item.back())) ||
                                                static_cast<unsigned char>(item.back()) >= 0x80);
        out.push_back(parse_quantity(has_unit || trailing.empty() ? item : item + trailing, kind));
    }
    return out;
}

bool parse_bool(const std::string& v)
{
    if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "off" || v == "no" || v == "0") return false;
    throw Error("expected a boolean (true/false/on/off), got '" + v + "'");
}

std::uint64_t parse_unsigned(const std::string& v)
{
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
        throw Error("expected a nonnegative integer, got '" + v + "'");
    errno = 0;
    const unsigned long long x = std::strtoull(v.c_str(), nullptr, 10);
    if (errno == ERANGE) throw Error("integer '" + v + "' is out of range");
    return x;
}

Vec2 parse_pair(const std::string& v)
{
    const auto xs = parse_quantity_list(v, Quantity::length_nm);
    if (xs.size() != 2) throw Error("expected two lengths (x y)");
    return {xs[0], xs[1]};
}

double parse_single(const std::string& v, Quantity kind)
{
    const auto xs = parse_quantity_list(v, kind);
    if (xs.size() != 1) throw Error("expected a single value");
    return xs[0];
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters()
{
    using Q = Quantity;
    static const std::map<std::string, Setter> table = {
        {"seed", [](RunConfig& c, const std::string& v) { c.seed = parse_unsigned(v); }},

        {"implant.energy", [](RunConfig& c, const std::string& v) { c.energy_kev = parse_single(v, Q::energy_kev); }},
        {"implant.dose", [](RunConfig& c, const std::string& v) { c.dose = parse_single(v, Q::none); }},
        {"implant.window",
         [](RunConfig& c, const std::string& v) {
             const auto xs = parse_quantity_list(v, Q::length_nm);
             if (xs.size() != 4) throw Error("expected x0 y0 x1 y1");
             c.window = Rect{xs[0], xs[1], xs[2], xs[3]};
         }},
        {"implant.conversion_yield",
         [](RunConfig& c, const std::string& v) { c.conversion_yield = parse_single(v, Q::none); }},
        {"implant.allow_high_yield", [](RunConfig& c, const std::string& v) { c.allow_high_yield = parse_bool(v); }},
        {"implant.dead_layer_loss",
         [](RunConfig& c, const std::string& v) { c.dead_layer_kev = parse_single(v, Q::energy_kev); }},

        {"naa.enabled", [](RunConfig& c, const std::string& v) { c.naa_enabled = parse_bool(v); }},
        {"naa.aperture_diameter",
         [](RunConfig& c, const std::string& v) { c.naa.aperture_diameter = parse_single(v, Q::length_nm); }},
        {"naa.wall_width", [](RunConfig& c, const std::string& v) { c.naa.wall_width = parse_single(v, Q::length_nm); }},
        {"naa.thickness", [](RunConfig& c, const std::string& v) { c.naa.thickness = parse_single(v, Q::length_nm); }},
        {"naa.offset", [](RunConfig& c, const std::string& v) { c.naa.offset = parse_pair(v); }},
        {"naa.rotation", [](RunConfig& c, const std::string& v) { c.naa.rotation = parse_single(v, Q::none); }},
        {"naa.jitter_sigma",
         [](RunConfig& c, const std::string& v) { c.naa.diameter_jitter_sigma = parse_single(v, Q::length_nm); }},
        {"naa.jitter_seed", [](RunConfig& c, const std::string& v) { c.naa.jitter_seed = parse_unsigned(v); }},

        {"ebl.enabled", [](RunConfig& c, const std::string& v) { c.ebl_enabled = parse_bool(v); }},
        {"ebl.hole_diameter",
         [](RunConfig& c, const std::string& v) { c.ebl.hole_diameter = parse_single(v, Q::length_nm); }},
        {"ebl.thickness", [](RunConfig& c, const std::string& v) { c.ebl.thickness = parse_single(v, Q::length_nm); }},
        {"ebl.pitch",
         [](RunConfig& c, const std::string& v) {
             std::get<EblLayer::Grid>(c.ebl.holes).pitch = parse_single(v, Q::length_nm);
         }},
        {"ebl.nx",
         [](RunConfig& c, const std::string& v) {
             std::get<EblLayer::Grid>(c.ebl.holes).nx = static_cast<long>(parse_unsigned(v));
         }},
        {"ebl.ny",
         [](RunConfig& c, const std::string& v) {
             std::get<EblLayer::Grid>(c.ebl.holes).ny = static_cast<long>(parse_unsigned(v));
         }},
        {"ebl.origin",
         [](RunConfig& c, const std::string& v) { std::get<EblLayer::Grid>(c.ebl.holes).origin = parse_pair(v); }},

        {"transport.model",
         [](RunConfig& c, const std::string& v) {
             if (v == "gaussian") c.transport = TransportKind::gaussian;
             else if (v == "bca") c.transport = TransportKind::bca;
             else throw Error("expected 'gaussian' or 'bca', got '" + v + "'");
         }},
        {"transport.range_table", [](RunConfig& c, const std::string& v) { c.range_table = v; }},
        {"transport.stop_energy",
         [](RunConfig& c, const std::string& v) { c.bca.stop_energy = parse_single(v, Q::energy_ev); }},
        {"transport.electronic",
         [](RunConfig& c, const std::string& v) { c.bca.electronic = parse_electronic_stopping(v); }},
        {"transport.density",
         [](RunConfig& c, const std::string& v) {
             c.bca.target = TargetMaterial::carbon(parse_single(v, Q::none));
         }},
        {"transport.table_ions",
         [](RunConfig& c, const std::string& v) { c.table_ions = static_cast<std::size_t>(parse_unsigned(v)); }},

        {"sweep.energies",
         [](RunConfig& c, const std::string& v) { c.sweep.energies_kev = parse_quantity_list(v, Q::energy_kev); }},
        {"sweep.hole_diameters",
         [](RunConfig& c, const std::string& v) {
             c.sweep.hole_diameters_nm = parse_quantity_list(v, Q::length_nm);
         }},
        {"sweep.naa",
         [](RunConfig& c, const std::string& v) {
             c.sweep.naa.clear();
             for (const auto& item : list_items(v)) c.sweep.naa.push_back(parse_bool(item));
             if (c.sweep.naa.empty()) throw Error("expected at least one of on/off");
         }},
        {"sweep.ions_per_cell",
         [](RunConfig& c, const std::string& v) {
             c.sweep.ions_per_cell = static_cast<std::size_t>(parse_unsigned(v));
         }},
        {"sweep.bin_width", [](RunConfig& c, const std::string& v) { c.sweep.bin_width_nm = parse_single(v, Q::length_nm); }},
        {"sweep.kde_spacing",
         [](RunConfig& c, const std::string& v) { c.sweep.kde_spacing_nm = parse_single(v, Q::length_nm); }},
        {"sweep.bandwidth",
         [](RunConfig& c, const std::string& v) {
             if (v == "scott") c.sweep.bandwidth = ScottBandwidth{};
             else c.sweep.bandwidth = parse_single(v, Q::length_nm);
         }},
        {"sweep.lateral_only", [](RunConfig& c, const std::string& v) { c.sweep.lateral_only = parse_bool(v); }},
        {"sweep.svg", [](RunConfig& c, const std::string& v) { c.sweep.svg = parse_bool(v); }},

        {"pl.single_nv", [](RunConfig& c, const std::string& v) { c.pl.single_nv_kcps = parse_single(v, Q::rate_kcps); }},
        {"pl.total", [](RunConfig& c, const std::string& v) { c.pl.total_kcps = parse_single(v, Q::rate_kcps); }},
        {"pl.masked", [](RunConfig& c, const std::string& v) { c.pl.masked_kcps = parse_single(v, Q::rate_kcps); }},
        {"pl.bare", [](RunConfig& c, const std::string& v) { c.pl.bare_kcps = parse_single(v, Q::rate_kcps); }},

        {"output.dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; }},
    };
    return table;
}

void check(const RunConfig& c)
{
    if (c.sweep.energies_kev.empty() || c.sweep.hole_diameters_nm.empty() || c.sweep.naa.empty())
        throw Error("sweep axes must be nonempty");
    if (c.sweep.ions_per_cell < 2) throw Error("sweep.ions_per_cell must be at least 2");
    if (!(c.sweep.bin_width_nm > 0.0) || !(c.sweep.kde_spacing_nm > 0.0))
        throw Error("sweep bin width and KDE spacing must be positive");
    if (c.range_table && !std::filesystem::exists(*c.range_table))
        throw Error("range table '" + c.range_table->string() + "' does not exist");
}

} // namespace

double parse_quantity(const std::string& text, Quantity kind)
{
    const std::string t = io::trim(text);
    std::size_t split = t.size();
    while (split > 0) {
        const auto ch = static_cast<unsigned char>(t[split - 1]);
        if (std::isalpha(ch) || ch >= 0x80) --split;
        else break;
    }
    // exponents like 4e13 end in a digit, so a bare 'e' never reaches here
    const std::string number = io::trim(t.substr(0, split));
    const std::string unit = t.substr(split);
    const double v = parse_number(number);
    if (unit.empty()) return v;
    for (const auto& u : units_for(kind))
        if (unit == u.name) return v * u.scale;
    if (kind == Quantity::none) throw Error("unexpected unit '" + unit + "' on a dimensionless value");
    std::string allowed;
    for (const auto& u : units_for(kind)) allowed += (allowed.empty() ? "" : ", ") + std::string(u.name);
    throw Error("unknown unit '" + unit + "' (expected one of: " + allowed + ")");
}

MaskStack RunConfig::build_mask() const
{
    MaskStack stack;
    if (naa_enabled) stack.layers.emplace_back(naa);
    if (ebl_enabled) stack.layers.emplace_back(ebl);
    stack.dead_layer_energy_loss = dead_layer_kev;
    return stack;
}

Rect RunConfig::resolved_window() const
{
    if (window) return *window;
    if (ebl_enabled) {
        if (const auto* g = std::get_if<EblLayer::Grid>(&ebl.holes)) {
            const double half = 0.5 * g->pitch;
            return {g->origin.x - half, g->origin.y - half, g->origin.x + (static_cast<double>(g->nx) - 0.5) * g->pitch,
                    g->origin.y + (static_cast<double>(g->ny) - 0.5) * g->pitch};
        }
    }
    throw Error("implant.window is required when there is no EBL grid");
}

std::uint64_t RunConfig::require_seed() const
{
    if (!seed) throw Error("no seed given: set 'seed' in the config or pass --seed (runs are never clock-seeded)");
    return *seed;
}

RunConfig parse_config(std::istream& in, const std::string& source, const std::filesystem::path& base_dir)
{
    RunConfig config;
    static const std::set<std::string> sections = {"implant", "naa", "ebl", "transport", "sweep", "pl", "output"};
    std::set<std::string> seen;
    std::string section;
    std::string line;
    long lineno = 0;
    const auto fail = [&](const std::string& what) {
        throw Error(source + ":" + std::to_string(lineno) + ": " + what);
    };

    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        const std::string t = io::trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') fail("malformed section header '" + t + "'");
            section = io::trim(t.substr(1, t.size() - 2));
            if (!sections.count(section)) fail("unknown section [" + section + "]");
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) fail("expected 'key = value', got '" + t + "'");
        const std::string key = io::trim(t.substr(0, eq));
        const std::string value = io::trim(t.substr(eq + 1));
        const std::string full = section.empty() ? key : section + "." + key;
        const auto it = setters().find(full);
        if (it == setters().end()) fail("unknown key '" + full + "'");
        if (!seen.insert(full).second) fail("duplicate key '" + full + "'");
        if (value.empty()) fail("key '" + full + "' has no value");
        try {
            it->second(config, value);
        } catch (const Error& e) {
            fail("key '" + full + "': " + e.what());
        }
    }
    if (config.range_table && config.range_table->is_relative() && !base_dir.empty())
        config.range_table = base_dir / *config.range_table;
    try {
        check(config);
    } catch (const Error& e) {
        throw Error(source + ": " + e.what());
    }
    return config;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot open config '" + path.string() + "'");
    return parse_config(in, path.string(), path.parent_path());
}

} // namespace nvmask
