#include "plriv/csv_io.hpp"

#include "plriv/errors.hpp"

#include <charconv>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

namespace plriv {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell += c;
        }
    }
    cells.push_back(cell);
    return cells;
}

std::optional<double> parse_cell(const std::string& cell) {
    std::size_t begin = cell.find_first_not_of(" \t");
    if (begin == std::string::npos) return std::nullopt;
    const std::size_t end = cell.find_last_not_of(" \t") + 1;
    double value = 0.0;
    const char* first = cell.data() + begin;
    const char* last = cell.data() + end;
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last) return std::nullopt;
    return value;
}

std::size_t find_column(const std::vector<std::string>& header,
                        const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw ConfigError("load_csv: column '" + name + "' not found in header");
}

void format_cell(std::ostream& os, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    os.write(buf, res.ptr - buf);
}

}  // namespace

LoadedCsv load_csv_stream(std::istream& is, const ColumnMapping& mapping) {
    std::string line;
    if (!std::getline(is, line)) {
        throw DataError("load_csv: empty file");
    }
    const std::vector<std::string> header = split_line(line);

    std::vector<std::size_t> cols;
    cols.push_back(find_column(header, mapping.y));
    cols.push_back(find_column(header, mapping.z));
    for (const auto& name : mapping.x) cols.push_back(find_column(header, name));
    for (const auto& name : mapping.w) cols.push_back(find_column(header, name));
    const std::size_t p = mapping.x.size();
    const std::size_t m = mapping.w.size();
    if (m == 0) {
        throw ConfigError("load_csv: at least one instrument column required");
    }

    std::vector<std::vector<double>> rows;
    std::size_t dropped = 0;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> cells = split_line(line);
        std::vector<double> parsed;
        parsed.reserve(cols.size());
        bool ok = true;
        for (std::size_t c : cols) {
            if (c >= cells.size()) {
                ok = false;
                break;
            }
            const auto v = parse_cell(cells[c]);
            if (!v) {
                ok = false;
                break;
            }
            parsed.push_back(*v);
        }
        if (ok) {
            rows.push_back(std::move(parsed));
        } else {
            ++dropped;
        }
    }
    if (rows.empty()) {
        throw DataError("load_csv: no usable rows");
    }

    const auto n = static_cast<Eigen::Index>(rows.size());
    LoadedCsv out;
    out.dropped_rows = dropped;
    out.data.Y.resize(n);
    out.data.Z.resize(n);
    out.data.X.resize(n, static_cast<Eigen::Index>(p));
    out.data.W.resize(n, static_cast<Eigen::Index>(m));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        out.data.Y[i] = r[0];
        out.data.Z[i] = r[1];
        for (std::size_t j = 0; j < p; ++j) {
            out.data.X(i, static_cast<Eigen::Index>(j)) = r[2 + j];
        }
        for (std::size_t j = 0; j < m; ++j) {
            out.data.W(i, static_cast<Eigen::Index>(j)) = r[2 + p + j];
        }
    }
    return out;
}

LoadedCsv load_csv(const std::string& path, const ColumnMapping& mapping) {
    std::ifstream file(path);
    if (!file) {
        throw DataError("load_csv: cannot open '" + path + "'");
    }
    return load_csv_stream(file, mapping);
}

void write_dataset_csv(std::ostream& os, const Dataset& data,
                       const ColumnMapping& mapping) {
    if (static_cast<Eigen::Index>(mapping.x.size()) != data.p() ||
        static_cast<Eigen::Index>(mapping.w.size()) != data.m()) {
        throw std::invalid_argument("write_dataset_csv: name count mismatch");
    }
    os << mapping.y << ',' << mapping.z;
    for (const auto& name : mapping.x) os << ',' << name;
    for (const auto& name : mapping.w) os << ',' << name;
    os << '\n';
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        format_cell(os, data.Y[i]);
        os << ',';
        format_cell(os, data.Z[i]);
        for (Eigen::Index j = 0; j < data.p(); ++j) {
            os << ',';
            format_cell(os, data.X(i, j));
        }
        for (Eigen::Index j = 0; j < data.m(); ++j) {
            os << ',';
            format_cell(os, data.W(i, j));
        }
        os << '\n';
    }
}

}  // namespace plriv
