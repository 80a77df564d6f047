#include "mvgls/matrix_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mvgls/errors.hpp"

namespace mvgls {

std::string format_double(double value) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) throw Error("format_double: conversion failed");
    return std::string(buf, ptr);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_cell(const std::string& cell, long line_no) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || begin == end) {
        throw ParseError("non-numeric cell '" + cell + "'", line_no);
    }
    return value;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

}  // namespace

void write_matrix_csv(const std::string& path, const Matrix& values) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            if (j > 0) out << ',';
            out << format_double(values(i, j));
        }
        out << '\n';
    }
}

Matrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_line(line);
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& cell : cells) row.push_back(parse_cell(cell, line_no));
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ParseError("ragged row", line_no);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("empty matrix file '" + path + "'");
    Matrix values(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return values;
}

namespace {

int parse_label(const std::string& cell, long line_no) {
    const std::string t = trim(cell);
    if (t == "1") return 1;
    if (t == "2") return 2;
    throw ParseError("unknown group label '" + t + "' (labels must be 1 or 2)", line_no);
}

}  // namespace

LoadedData load_matrix_csv(const std::string& path, const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");

    std::string line;
    long line_no = 0;
    if (!std::getline(in, line)) throw ParseError("missing header row", 1);
    ++line_no;
    std::vector<std::string> header = split_line(line);
    for (auto& h : header) h = trim(h);

    std::optional<std::size_t> label_col;
    if (options.group_column.has_value()) {
        auto it = std::find(header.begin(), header.end(), *options.group_column);
        if (it == header.end()) {
            throw ParseError("group column '" + *options.group_column + "' not in header", 1);
        }
        label_col = static_cast<std::size_t>(it - header.begin());
    }

    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size()) throw ParseError("ragged row", line_no);
        std::vector<double> row;
        row.reserve(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (label_col.has_value() && c == *label_col) {
                labels.push_back(parse_label(cells[c], line_no));
            } else {
                row.push_back(parse_cell(cells[c], line_no));
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("no data rows in '" + path + "'");

    std::vector<std::string> names;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (!label_col.has_value() || c != *label_col) names.push_back(header[c]);
    }

    Matrix values(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }

    if (options.transpose) {
        values = values.transpose().eval();
        const auto n = static_cast<std::size_t>(values.rows());
        names.clear();
        for (std::size_t j = 0; j < static_cast<std::size_t>(values.cols()); ++j) {
            names.push_back("v" + std::to_string(j + 1));
        }
        (void)n;
    }

    if (options.group_file.has_value()) {
        if (label_col.has_value()) {
            throw ParseError("give either a group column or a group file, not both");
        }
        std::ifstream gin(*options.group_file);
        if (!gin) throw ParseError("cannot open '" + *options.group_file + "'");
        std::string gl;
        long gline = 0;
        labels.clear();
        while (std::getline(gin, gl)) {
            ++gline;
            if (trim(gl).empty()) continue;
            labels.push_back(parse_label(gl, gline));
        }
    }
    if (labels.empty()) {
        throw ParseError("no group labels: use a label column or a side file");
    }
    if (static_cast<Eigen::Index>(labels.size()) != values.rows()) {
        throw ParseError("label count (" + std::to_string(labels.size()) +
                         ") does not match sample count (" + std::to_string(values.rows()) +
                         ")");
    }

    LoadedData loaded;
    loaded.kept_columns.resize(static_cast<std::size_t>(values.cols()));
    std::iota(loaded.kept_columns.begin(), loaded.kept_columns.end(), 0);

    if (options.top_variance.has_value()) {
        const int keep = *options.top_variance;
        if (keep < 1 || keep > values.cols()) {
            throw InvalidParameter("top_variance count out of range");
        }
        Vector variances(values.cols());
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            const double mean = values.col(j).mean();
            variances[j] = (values.col(j).array() - mean).square().sum() /
                           static_cast<double>(values.rows() - 1);
        }
        std::vector<int> order(static_cast<std::size_t>(values.cols()));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            if (variances[a] != variances[b]) return variances[a] > variances[b];
            return a < b;
        });
        std::vector<int> kept(order.begin(), order.begin() + keep);
        std::sort(kept.begin(), kept.end());  // keep original column order
        Matrix filtered(values.rows(), keep);
        std::vector<std::string> kept_names;
        for (int c = 0; c < keep; ++c) {
            filtered.col(c) = values.col(kept[static_cast<std::size_t>(c)]);
            kept_names.push_back(names[static_cast<std::size_t>(kept[static_cast<std::size_t>(c)])]);
        }
        values = std::move(filtered);
        names = std::move(kept_names);
        loaded.kept_columns = std::move(kept);
    }

    if (options.unit_variance) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            const double mean = values.col(j).mean();
            const double var = (values.col(j).array() - mean).square().sum() /
                               static_cast<double>(values.rows() - 1);
            if (!(var > 0.0)) {
                throw DegenerateVariance(
                    "unit-variance rescale: zero variance in column " + std::to_string(j),
                    static_cast<int>(j));
            }
            values.col(j) /= std::sqrt(var);
        }
    }

    loaded.data = DataMatrix::create(std::move(values), std::move(labels));
    loaded.variable_names = std::move(names);
    return loaded;
}

void write_data_csv(const std::string& path, const DataMatrix& data,
                    const std::vector<std::string>& variable_names) {
    if (static_cast<int>(variable_names.size()) != data.m) {
        throw InvalidParameter("write_data_csv: one name per variable required");
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << "group";
    for (const auto& name : variable_names) out << ',' << name;
    out << '\n';
    for (int i = 0; i < data.n; ++i) {
        out << data.groups[static_cast<std::size_t>(i)];
        for (int j = 0; j < data.m; ++j) out << ',' << format_double(data.values(i, j));
        out << '\n';
    }
}

}  // namespace mvgls
