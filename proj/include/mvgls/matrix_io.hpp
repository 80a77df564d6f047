#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mvgls/types.hpp"

namespace mvgls {

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);

/// Headerless CSV of floats.
void write_matrix_csv(const std::string& path, const Matrix& values);
Matrix read_matrix_csv(const std::string& path);

struct LoadOptions {
    std::optional<std::string> group_column;  // label column name in the CSV
    std::optional<std::string> group_file;    // one label per line
    bool transpose = false;                   // genes-as-rows input
    std::optional<int> top_variance;          // keep k most variable columns
    bool unit_variance = false;               // rescale columns to variance 1
};

struct LoadedData {
    DataMatrix data;
    std::vector<std::string> variable_names;
    std::vector<int> kept_columns;  // original column indices after filtering
};

/// Numeric CSV with a header row of variable names; group labels come
/// from a named column or a side file. Preprocessing (variance filter,
/// unit-variance rescale) is applied in this order after loading.
LoadedData load_matrix_csv(const std::string& path, const LoadOptions& options);

/// Data matrix plus header and label column, reloadable by load_matrix_csv.
void write_data_csv(const std::string& path, const DataMatrix& data,
                    const std::vector<std::string>& variable_names);

}  // namespace mvgls
