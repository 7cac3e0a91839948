#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "accel/kriging.hpp"

namespace accel::io {

// Shortest round-trip decimal rendering; locale-independent '.' separator.
std::string format_double(double value);

// Design-set CSV: coordinate columns x1..xd, one column y, header required.
void write_design_csv(const std::filesystem::path& path, const kriging::DesignSet& design);
kriging::DesignSet read_design_csv(const std::filesystem::path& path);

// Generic numeric table with named columns (header required).
struct Table {
    std::vector<std::string> columns;
    Eigen::MatrixXd values;

    [[nodiscard]] Eigen::Index column_index(const std::string& name) const;
};
Table read_table_csv(const std::filesystem::path& path);

// Row-at-a-time CSV emitter; writes the header up front.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
    void row(const std::vector<std::string>& cells);

private:
    std::ofstream out_;
    std::size_t width_;
};

}  // namespace accel::io
