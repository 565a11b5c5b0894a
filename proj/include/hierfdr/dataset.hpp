// Canonical CSV data file. The header names the columns and the prefix decides the role:
//   z or p    test statistic (exactly one)
//   x_<j>     test-level covariate
//   a_<j>     auxiliary feature
//   h         ground truth (0/1), optional
// Covariate columns are ordered by the numeric suffix.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hierfdr/matrix.hpp"
#include "hierfdr/simulate.hpp"

namespace hierfdr {

struct DataFile {
    std::optional<std::vector<double>> z;
    std::optional<std::vector<double>> p;
    Matrix x;
    Matrix aux;
    std::optional<std::vector<bool>> h;

    std::size_t size() const { return z ? z->size() : (p ? p->size() : 0); }

    /// Human-readable list of the column roles present, e.g. "z, x (100), a (5), h".
    std::string roles() const {
        std::string s;
        auto add = [&](const std::string& r) { s += (s.empty() ? "" : ", ") + r; };
        if (z) add("z");
        if (p) add("p");
        if (x.cols) add("x (" + std::to_string(x.cols) + ")");
        if (aux.cols) add("a (" + std::to_string(aux.cols) + ")");
        if (h) add("h");
        return s.empty() ? "none" : s;
    }
};

class DataFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        std::string_view cell = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
        out.emplace_back(cell);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double parse_cell(const std::string& s, std::size_t line, const std::string& column) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (s.empty() || ec != std::errc{} || ptr != last || !std::isfinite(v))
        throw DataFormatError("line " + std::to_string(line) + ", column '" + column + "': not a finite number: '" + s + "'");
    return v;
}

inline std::optional<std::size_t> column_suffix(const std::string& name, char prefix) {
    if (name.size() < 3 || name[0] != prefix || name[1] != '_') return std::nullopt;
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(name.data() + 2, name.data() + name.size(), v);
    if (ec != std::errc{} || ptr != name.data() + name.size()) return std::nullopt;
    return v;
}

}  // namespace detail

inline DataFile read_data(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DataFormatError("empty data file");
    const auto header = detail::split_csv_line(line);

    std::optional<std::size_t> z_col, p_col, h_col;
    std::vector<std::pair<std::size_t, std::size_t>> x_cols, a_cols;  // (suffix, column)
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string& name = header[c];
        auto claim = [&](std::optional<std::size_t>& slot) {
            if (slot) throw DataFormatError("duplicate column '" + name + "'");
            slot = c;
        };
        if (name == "z") claim(z_col);
        else if (name == "p") claim(p_col);
        else if (name == "h") claim(h_col);
        else if (auto j = detail::column_suffix(name, 'x')) x_cols.emplace_back(*j, c);
        else if (auto j = detail::column_suffix(name, 'a')) a_cols.emplace_back(*j, c);
        else throw DataFormatError("unrecognized column '" + name + "' (expected z, p, x_<j>, a_<j> or h)");
    }
    auto check_unique = [](auto& cols, char prefix) {
        std::sort(cols.begin(), cols.end());
        for (std::size_t i = 1; i < cols.size(); ++i)
            if (cols[i].first == cols[i - 1].first)
                throw DataFormatError(std::string("duplicate column '") + prefix + "_" + std::to_string(cols[i].first) + "'");
    };
    check_unique(x_cols, 'x');
    check_unique(a_cols, 'a');
    if (z_col && p_col) throw DataFormatError("both z and p columns present; supply exactly one");

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw DataFormatError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                                  " cells, found " + std::to_string(cells.size()));
        std::vector<double> row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) row[c] = detail::parse_cell(cells[c], line_no, header[c]);
        rows.push_back(std::move(row));
    }

    const std::size_t n = rows.size();
    DataFile d;
    auto column = [&](std::size_t c) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = rows[i][c];
        return v;
    };
    if (z_col) d.z = column(*z_col);
    if (p_col) {
        d.p = column(*p_col);
        for (std::size_t i = 0; i < n; ++i)
            if ((*d.p)[i] < 0.0 || (*d.p)[i] > 1.0)
                throw DataFormatError("line " + std::to_string(i + 2) + ": p-value outside [0,1]");
    }
    if (h_col) {
        std::vector<bool> h(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double v = rows[i][*h_col];
            if (v != 0.0 && v != 1.0) throw DataFormatError("line " + std::to_string(i + 2) + ": h must be 0 or 1");
            h[i] = v == 1.0;
        }
        d.h = std::move(h);
    }
    auto fill = [&](Matrix& m, const std::vector<std::pair<std::size_t, std::size_t>>& cols) {
        m = Matrix(n, cols.size());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < cols.size(); ++j) m(i, j) = rows[i][cols[j].second];
    };
    fill(d.x, x_cols);
    fill(d.aux, a_cols);
    if (!d.z && !d.p)
        throw DataFormatError("missing test statistic column z or p; columns found: " + d.roles());
    return d;
}

inline DataFile read_data(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open data file '" + path + "'");
    return read_data(in);
}

inline void write_data(std::ostream& out, const DataFile& d) {
    const std::size_t n = d.size();
    std::vector<std::string> cols;
    if (d.z) cols.emplace_back("z");
    if (d.p) cols.emplace_back("p");
    for (std::size_t j = 0; j < d.x.cols; ++j) cols.push_back("x_" + std::to_string(j + 1));
    for (std::size_t j = 0; j < d.aux.cols; ++j) cols.push_back("a_" + std::to_string(j + 1));
    if (d.h) cols.emplace_back("h");
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
    out << '\n';

    std::ostringstream cell;
    cell.precision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < n; ++i) {
        cell.str("");
        bool first = true;
        auto put = [&](double v) {
            if (!first) cell << ',';
            cell << v;
            first = false;
        };
        if (d.z) put((*d.z)[i]);
        if (d.p) put((*d.p)[i]);
        for (std::size_t j = 0; j < d.x.cols; ++j) put(d.x(i, j));
        for (std::size_t j = 0; j < d.aux.cols; ++j) put(d.aux(i, j));
        if (d.h) {
            cell << (first ? "" : ",") << ((*d.h)[i] ? '1' : '0');
            first = false;
        }
        out << cell.str() << '\n';
    }
}

inline void write_data(const std::string& path, const DataFile& d) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write data file '" + path + "'");
    write_data(out, d);
    if (!out) throw std::runtime_error("error while writing '" + path + "'");
}

inline DataFile to_data_file(const SyntheticDataset& s) {
    DataFile d;
    d.z = s.z;
    d.x = s.x;
    d.aux = s.x_aux;
    d.h = s.h;
    return d;
}

}  // namespace hierfdr
