#include "hybridcorr/csv.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>

#include "hybridcorr/errors.hpp"

namespace hcorr {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::optional<double> parse_cell(std::string_view cell, std::size_t line_no) {
    cell = trim(cell);
    if (cell.empty()) return std::nullopt;
    if (cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw ParseError("line " + std::to_string(line_no) + ": cannot parse '" + std::string(cell) +
                         "' as a number");
    return value;
}

bool blank(std::string_view line) { return trim(line).empty(); }

}  // namespace

std::optional<std::size_t> CsvTable::find(std::string_view name) const {
    for (std::size_t k = 0; k < header.size(); ++k)
        if (header[k] == name) return k;
    return std::nullopt;
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        const auto end = comma == std::string_view::npos ? line.size() : comma;
        cells.emplace_back(trim(line.substr(start, end - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

CsvTable read_csv_table(std::istream& in) {
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        table.header = split_csv_line(line);
        break;
    }
    if (table.header.empty()) throw ParseError("CSV input has no header row");
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != table.header.size())
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(table.header.size()) + " cells, found " +
                             std::to_string(cells.size()));
        std::vector<std::optional<double>> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(parse_cell(c, line_no));
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string format_exact(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void write_panel_csv(std::ostream& out, const ObservationPanel& panel) {
    out << "t";
    for (const auto& [key, values] : panel.series()) out << ',' << key.str();
    out << '\n';
    for (std::size_t k = 0; k < panel.length(); ++k) {
        out << format_exact(panel.times()[k]);
        for (const auto& [key, values] : panel.series()) out << ',' << format_exact(values[k]);
        out << '\n';
    }
}

ObservationPanel read_panel_csv(std::istream& in) {
    const CsvTable table = read_csv_table(in);
    if (table.header.empty() || table.header.front() != "t")
        throw ParseError("panel CSV must start with a 't' column");
    std::vector<double> times;
    ObservationPanel::SeriesMap series;
    std::vector<SeriesKey> keys;
    for (std::size_t c = 1; c < table.header.size(); ++c) {
        try {
            keys.push_back(SeriesKey::parse(table.header[c]));
        } catch (const Error& e) {
            throw ParseError("column '" + table.header[c] + "': " + e.what());
        }
        series[keys.back()];
    }
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        for (std::size_t c = 0; c < row.size(); ++c)
            if (!row[c])
                throw ParseError("row " + std::to_string(r + 1) + ": empty cell in column '" +
                                 table.header[c] + "'");
        times.push_back(*row[0]);
        for (std::size_t c = 1; c < row.size(); ++c) series[keys[c - 1]].push_back(*row[c]);
    }
    try {
        return ObservationPanel(std::move(times), std::move(series));
    } catch (const DimensionError& e) {
        throw ParseError(std::string("invalid panel: ") + e.what());
    }
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& labels) {
    if (static_cast<Eigen::Index>(labels.size()) != m.rows() || m.rows() != m.cols())
        throw DimensionError("matrix CSV needs a square matrix and one label per row");
    out << "label";
    for (const auto& l : labels) out << ',' << l;
    out << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        out << labels[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < m.cols(); ++c) out << ',' << format_exact(m(r, c));
        out << '\n';
    }
}

LabeledMatrix read_matrix_csv(std::istream& in) {
    std::vector<std::vector<std::string>> lines;
    std::string line;
    while (std::getline(in, line))
        if (!blank(line)) lines.push_back(split_csv_line(line));
    if (lines.empty()) throw ParseError("matrix CSV is empty");

    // A header is present when the first cell is not numeric.
    bool labeled = false;
    try {
        parse_cell(lines[0][0], 1);
    } catch (const ParseError&) {
        labeled = true;
    }
    LabeledMatrix out;
    const std::size_t first_row = labeled ? 1 : 0;
    const std::size_t first_col = labeled ? 1 : 0;
    const std::size_t n = lines.size() - first_row;
    if (labeled) out.labels.assign(lines[0].begin() + 1, lines[0].end());
    if (labeled && out.labels.size() != n)
        throw ParseError("matrix CSV: header has " + std::to_string(out.labels.size()) +
                         " labels for " + std::to_string(n) + " rows");
    out.entries.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
        const auto& cells = lines[first_row + r];
        if (cells.size() != n + first_col)
            throw ParseError("matrix CSV: row " + std::to_string(r + 1) + " is not square");
        if (labeled && cells[0] != out.labels[r])
            throw ParseError("matrix CSV: row label '" + cells[0] + "' does not match column label '" +
                             out.labels[r] + "'");
        for (std::size_t c = 0; c < n; ++c) {
            const auto v = parse_cell(cells[first_col + c], first_row + r + 1);
            if (!v) throw ParseError("matrix CSV: empty cell in row " + std::to_string(r + 1));
            out.entries(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *v;
        }
    }
    return out;
}

}  // namespace hcorr
