#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hybridcorr/core_types.hpp"

namespace hcorr {

/// Header plus numeric cells; an empty cell is std::nullopt.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::optional<double>>> rows;

    /// Column index by header name, or nullopt.
    std::optional<std::size_t> find(std::string_view name) const;
};

/// Splits one CSV line on commas, trimming blanks around cells.
std::vector<std::string> split_csv_line(std::string_view line);

/// Reads a numeric CSV with a mandatory header. Throws ParseError on ragged
/// rows or unparsable cells.
CsvTable read_csv_table(std::istream& in);

/// 17 significant digits, enough for an exact double round trip.
std::string format_exact(double value);

/// "t" column followed by one column per series key.
void write_panel_csv(std::ostream& out, const ObservationPanel& panel);

/// Inverse of write_panel_csv; every non-"t" header must be a series key and
/// no cell may be empty.
ObservationPanel read_panel_csv(std::istream& in);

/// Labels as the first row and column.
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& labels);

struct LabeledMatrix {
    std::vector<std::string> labels;
    Eigen::MatrixXd entries;
};

/// Inverse of write_matrix_csv. Also accepts a plain numeric square matrix
/// without labels.
LabeledMatrix read_matrix_csv(std::istream& in);

}  // namespace hcorr
