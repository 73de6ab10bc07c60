#include "nvmask/io.hpp"

#include "nvmask/geometry.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

namespace nvmask::io {

std::string format_number(double v)
{
    char buf[64];
    for (int prec = 6; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

std::string format_fixed(double v, int decimals)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::size_t CsvTable::column(std::string_view name) const
{
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw Error("CSV column '" + std::string(name) + "' not found");
}

std::vector<std::string> split(std::string_view s, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            return out;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

CsvTable read_numeric_csv(std::istream& in, const std::vector<std::string>& expected,
                          const std::string& source)
{
    CsvTable table;
    std::string line;
    long lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto fields = split(t, ',');
        for (auto& f : fields) f = trim(f);
        if (!have_header) {
            if (fields.size() < expected.size())
                throw Error(source + ":" + std::to_string(lineno) + ": header has too few columns");
            for (std::size_t i = 0; i < expected.size(); ++i) {
                if (fields[i] != expected[i])
                    throw Error(source + ":" + std::to_string(lineno) + ": expected column '" +
                                expected[i] + "', found '" + fields[i] + "'");
            }
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size())
            throw Error(source + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(table.header.size()) + " fields, found " +
                        std::to_string(fields.size()));
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) {
            char* end = nullptr;
            const double v = std::strtod(f.c_str(), &end);
            if (f.empty() || end != f.c_str() + f.size())
                throw Error(source + ":" + std::to_string(lineno) + ": not a number: '" + f + "'");
            row.push_back(v);
        }
        table.rows.push_back(std::move(row));
    }
    if (!have_header) throw Error(source + ": missing CSV header");
    return table;
}

CsvTable read_numeric_csv_file(const std::filesystem::path& path, const std::vector<std::string>& expected)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return read_numeric_csv(in, expected, path.string());
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents)
{
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << contents;
        if (!out) throw Error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

} // namespace nvmask::io
