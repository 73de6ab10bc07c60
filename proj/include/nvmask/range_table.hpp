#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nvmask {

struct RangeRow {
    double energy_kev = 0.0;
    double rp_nm = 0.0;    // projected range
    double drp_nm = 0.0;   // longitudinal straggle
    double drlat_nm = 0.0; // lateral straggle, per-axis standard deviation
};

/// Energy-indexed range moments for one ion/target pair. Rows are kept sorted
/// by strictly increasing energy.
class RangeTable {
public:
    RangeTable() = default;
    explicit RangeTable(std::vector<RangeRow> rows);

    const std::vector<RangeRow>& rows() const { return rows_; }
    bool empty() const { return rows_.empty(); }
    double min_energy() const;
    double max_energy() const;

    /// Moments at energy_kev, log-log interpolated between bracketing rows
    /// (linear where a straggle is zero). Throws Error outside the table.
    RangeRow lookup(double energy_kev) const;

    static constexpr const char* csv_header = "energy_keV,rp_nm,drp_nm,drlat_nm";

    void write_csv(std::ostream& out) const;
    static RangeTable read_csv(std::istream& in, const std::string& source = "<stream>");
    static RangeTable load(const std::string& path);
    void save(const std::string& path) const;

private:
    std::vector<RangeRow> rows_;
};

} // namespace nvmask
