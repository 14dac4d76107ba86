// CSV emission and ingestion. All files use a header row, '.' decimal,
// LF newlines, and 17 significant digits so re-runs are byte-identical.
#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace sapinn::csv {

/// One double rendered with enough digits for an exact round-trip.
std::string format(double v);

/// Write columns under the given header names. All columns must share a length.
void write_columns(const std::string& path, const std::vector<std::string>& header,
                   const std::vector<Eigen::VectorXd>& columns);

struct Table {
    std::vector<std::string> header;
    Eigen::MatrixXd data; // rows x columns
};

/// Read a CSV written by write_columns (or any plain numeric CSV with a header).
Table read_table(const std::string& path);

} // namespace sapinn::csv
