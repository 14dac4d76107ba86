#include "sapinn/csv.hpp"

#include "sapinn/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace sapinn::csv {

std::string format(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_columns(const std::string& path, const std::vector<std::string>& header,
                   const std::vector<Eigen::VectorXd>& columns) {
    if (header.size() != columns.size())
        throw DimensionError("csv: header/column count mismatch for " + path);
    const Eigen::Index rows = columns.empty() ? 0 : columns.front().size();
    for (const auto& c : columns)
        if (c.size() != rows) throw DimensionError("csv: ragged columns for " + path);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("csv: cannot open for writing: " + path);
    for (std::size_t i = 0; i < header.size(); ++i)
        out << header[i] << (i + 1 < header.size() ? "," : "");
    out << "\n";
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c)
            out << format(columns[c][r]) << (c + 1 < columns.size() ? "," : "");
        out << "\n";
    }
    if (!out) throw IoError("csv: write failed: " + path);
}

Table read_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("csv: cannot open: " + path);
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw IoError("csv: empty file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.header.push_back(cell);
    }
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw IoError("csv: bad numeric cell at " + path + ":" + std::to_string(lineno));
            }
        }
        if (row.size() != t.header.size())
            throw IoError("csv: wrong column count at " + path + ":" + std::to_string(lineno));
        rows.push_back(std::move(row));
    }
    t.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.header.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            t.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return t;
}

} // namespace sapinn::csv
