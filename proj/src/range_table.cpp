#include "nvmask/range_table.hpp"

#include "nvmask/geometry.hpp"
#include "nvmask/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace nvmask {

namespace {

double interp(double e, double e0, double e1, double v0, double v1)
{
    if (v0 > 0.0 && v1 > 0.0) {
        const double t = std::log(e / e0) / std::log(e1 / e0);
        return std::exp(std::log(v0) + t * (std::log(v1) - std::log(v0)));
    }
    const double t = (e - e0) / (e1 - e0);
    return v0 + t * (v1 - v0);
}

} // namespace

RangeTable::RangeTable(std::vector<RangeRow> rows) : rows_(std::move(rows))
{
    std::sort(rows_.begin(), rows_.end(),
              [](const RangeRow& a, const RangeRow& b) { return a.energy_kev < b.energy_kev; });
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        const auto& r = rows_[i];
        if (!(r.energy_kev > 0.0)) throw Error("range table energies must be positive");
        if (!(r.rp_nm > 0.0)) throw Error("range table projected range must be positive");
        if (r.drp_nm < 0.0 || r.drlat_nm < 0.0) throw Error("range table straggles must be >= 0");
        if (i > 0 && !(r.energy_kev > rows_[i - 1].energy_kev))
            throw Error("range table energies must be strictly increasing (duplicate " +
                        io::format_number(r.energy_kev) + " keV)");
        if (i > 0 && r.rp_nm < rows_[i - 1].rp_nm)
            throw Error("range table projected range decreases at " + io::format_number(r.energy_kev) + " keV");
    }
}

double RangeTable::min_energy() const
{
    if (rows_.empty()) throw Error("empty range table");
    return rows_.front().energy_kev;
}

double RangeTable::max_energy() const
{
    if (rows_.empty()) throw Error("empty range table");
    return rows_.back().energy_kev;
}

RangeRow RangeTable::lookup(double energy_kev) const
{
    if (rows_.empty()) throw Error("empty range table");
    // tolerate round-off at the table bounds
    const double eps = 1e-12 * std::max(1.0, max_energy());
    if (energy_kev < min_energy() - eps)
        throw Error("energy " + io::format_number(energy_kev) + " keV is below the range table minimum of " +
                    io::format_number(min_energy()) + " keV");
    if (energy_kev > max_energy() + eps)
        throw Error("energy " + io::format_number(energy_kev) + " keV is above the range table maximum of " +
                    io::format_number(max_energy()) + " keV");
    energy_kev = std::clamp(energy_kev, min_energy(), max_energy());

    auto hi = std::lower_bound(rows_.begin(), rows_.end(), energy_kev,
                               [](const RangeRow& r, double e) { return r.energy_kev < e; });
    if (hi->energy_kev == energy_kev) return *hi;
    auto lo = hi - 1;
    RangeRow out;
    out.energy_kev = energy_kev;
    out.rp_nm = interp(energy_kev, lo->energy_kev, hi->energy_kev, lo->rp_nm, hi->rp_nm);
    out.drp_nm = interp(energy_kev, lo->energy_kev, hi->energy_kev, lo->drp_nm, hi->drp_nm);
    out.drlat_nm = interp(energy_kev, lo->energy_kev, hi->energy_kev, lo->drlat_nm, hi->drlat_nm);
    return out;
}

void RangeTable::write_csv(std::ostream& out) const
{
    out << csv_header << '\n';
    for (const auto& r : rows_) {
        out << io::format_number(r.energy_kev) << ',' << io::format_number(r.rp_nm) << ','
            << io::format_number(r.drp_nm) << ',' << io::format_number(r.drlat_nm) << '\n';
    }
}

RangeTable RangeTable::read_csv(std::istream& in, const std::string& source)
{
    const auto csv = io::read_numeric_csv(in, {"energy_keV", "rp_nm", "drp_nm", "drlat_nm"}, source);
    std::vector<RangeRow> rows;
    for (const auto& r : csv.rows) rows.push_back({r[0], r[1], r[2], r[3]});
    if (rows.empty()) throw Error(source + ": range table has no rows");
    return RangeTable(std::move(rows));
}

RangeTable RangeTable::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot open range table " + path);
    return read_csv(in, path);
}

void RangeTable::save(const std::string& path) const
{
    std::ostringstream out;
    write_csv(out);
    io::write_file_atomic(path, out.str());
}

} // namespace nvmask
