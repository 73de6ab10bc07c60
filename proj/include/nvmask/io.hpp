#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace nvmask::io {

/// Shortest round-trip decimal form of a double ("%.17g" trimmed).
std::string format_number(double v);
/// Fixed notation with the given number of decimals.
std::string format_fixed(double v, int decimals);

/// Numeric CSV table with a mandatory header line.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(std::string_view name) const; // throws when absent
};

/// Parses a numeric CSV. `expected` lists the required leading header
/// columns; errors name the source and 1-based line.
CsvTable read_numeric_csv(std::istream& in, const std::vector<std::string>& expected,
                          const std::string& source);
CsvTable read_numeric_csv_file(const std::filesystem::path& path,
                               const std::vector<std::string>& expected);

std::vector<std::string> split(std::string_view s, char sep);
std::string trim(std::string_view s);

/// Writes via a temporary file in the same directory and renames, so readers
/// never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

} // namespace nvmask::io
