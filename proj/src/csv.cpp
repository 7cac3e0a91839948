#include "accel/csv.hpp"

#include <charconv>
#include <sstream>
#include <stdexcept>

namespace accel::io {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string current;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(current);
            current.clear();
        } else if (c != '\r') {
            current.push_back(c);
        }
    }
    cells.push_back(current);
    return cells;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

double parse_double(const std::string& cell, const std::filesystem::path& path, std::size_t line) {
    const std::string t = trim(cell);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size()) {
        std::ostringstream os;
        os << path.string() << ":" << line << ": cannot parse number '" << cell << "'";
        throw std::runtime_error(os.str());
    }
    return value;
}

}  // namespace

std::string format_double(double value) {
    char buffer[32];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return std::string(buffer, ptr);
}

void write_design_csv(const std::filesystem::path& path, const kriging::DesignSet& design) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    const Eigen::Index d = design.X.cols();
    for (Eigen::Index k = 0; k < d; ++k) out << "x" << (k + 1) << ",";
    out << "y\n";
    for (Eigen::Index i = 0; i < design.X.rows(); ++i) {
        for (Eigen::Index k = 0; k < d; ++k) out << format_double(design.X(i, k)) << ",";
        out << format_double(design.Y[i]) << "\n";
    }
}

Table read_table_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error(path.string() + ": missing header row");
    }
    Table table;
    for (const auto& cell : split_line(line)) table.columns.push_back(trim(cell));
    const std::size_t width = table.columns.size();

    std::vector<double> data;
    std::size_t rows = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != width) {
            std::ostringstream os;
            os << path.string() << ":" << line_no << ": expected " << width << " cells, got "
               << cells.size();
            throw std::runtime_error(os.str());
        }
        for (const auto& cell : cells) data.push_back(parse_double(cell, path, line_no));
        ++rows;
    }
    table.values.resize(rows, width);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < width; ++j) {
            table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                data[i * width + j];
        }
    }
    return table;
}

Eigen::Index Table::column_index(const std::string& name) const {
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (columns[j] == name) return static_cast<Eigen::Index>(j);
    }
    throw std::runtime_error("csv table: missing column '" + name + "'");
}

kriging::DesignSet read_design_csv(const std::filesystem::path& path) {
    const Table table = read_table_csv(path);
    const std::size_t width = table.columns.size();
    if (width < 2) throw std::runtime_error(path.string() + ": need x1..xd and y columns");
    for (std::size_t j = 0; j + 1 < width; ++j) {
        const std::string expected = "x" + std::to_string(j + 1);
        if (table.columns[j] != expected) {
            throw std::runtime_error(path.string() + ": expected column '" + expected +
                                     "', found '" + table.columns[j] + "'");
        }
    }
    if (table.columns.back() != "y") {
        throw std::runtime_error(path.string() + ": last column must be 'y'");
    }
    if (table.values.rows() < 1) {
        throw std::runtime_error(path.string() + ": design must have at least one row");
    }
    kriging::DesignSet design;
    design.X = table.values.leftCols(width - 1);
    design.Y = table.values.rightCols(1);
    return design;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path), width_(header.size()) {
    if (!out_) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out_ << ",";
        out_ << header[i];
    }
    out_ << "\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw std::runtime_error("csv row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ",";
        out_ << cells[i];
    }
    out_ << "\n";
}

}  // namespace accel::io
