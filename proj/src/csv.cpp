#include "affinerf/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace affinerf::io {

namespace {

std::vector<std::string> split_line(std::string line) {
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return cells;
}

double parse_cell(const std::string& cell, std::size_t line_no, std::size_t col) {
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw std::runtime_error("csv parse error at line " + std::to_string(line_no) +
                                 ", column " + std::to_string(col + 1) + ": '" + cell +
                                 "' is not a number");
    if (!std::isfinite(value))
        throw std::runtime_error("csv parse error at line " + std::to_string(line_no) +
                                 ", column " + std::to_string(col + 1) + ": non-finite value");
    return value;
}

} // namespace

Dataset ingest_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open csv file '" + path + "'");

    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("csv parse error at line 1: missing header row");
    const auto header = split_line(line);
    if (header.size() < 2 || header.back() != "y")
        throw std::runtime_error("csv parse error at line 1: header must be x1,...,xd,y");
    const std::size_t d = header.size() - 1;
    for (std::size_t i = 0; i < d; ++i)
        if (header[i] != "x" + std::to_string(i + 1))
            throw std::runtime_error("csv parse error at line 1: expected column 'x" +
                                     std::to_string(i + 1) + "', found '" + header[i] + "'");

    std::vector<double> xs;
    std::vector<double> ys;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r")
            continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error("csv parse error at line " + std::to_string(line_no) +
                                     ": expected " + std::to_string(header.size()) +
                                     " cells, found " + std::to_string(cells.size()));
        for (std::size_t i = 0; i < d; ++i)
            xs.push_back(parse_cell(cells[i], line_no, i));
        ys.push_back(parse_cell(cells[d], line_no, d));
    }
    if (ys.empty())
        throw std::runtime_error("csv file '" + path + "' has a header but no data rows");

    const auto n = static_cast<Eigen::Index>(ys.size());
    Dataset data;
    data.X.resize(n, static_cast<Eigen::Index>(d));
    data.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j)
            data.X(i, static_cast<Eigen::Index>(j)) = xs[static_cast<std::size_t>(i) * d + j];
        data.y[i] = ys[static_cast<std::size_t>(i)];
    }
    return data;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc())
        throw std::runtime_error("number formatting failed");
    return std::string(buf, ptr);
}

void write_csv(const Dataset& data, const std::string& path) {
    data.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open '" + path + "' for writing");
    for (Eigen::Index j = 0; j < data.dim(); ++j)
        out << 'x' << (j + 1) << ',';
    out << "y\n";
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        for (Eigen::Index j = 0; j < data.dim(); ++j)
            out << format_double(data.X(i, j)) << ',';
        out << format_double(data.y[i]) << '\n';
    }
    if (!out)
        throw std::runtime_error("write to '" + path + "' failed");
}

std::vector<Eigen::Index> subsample_indices(Eigen::Index total, int n, Rng& rng) {
    if (n < 1 || n > total)
        throw std::invalid_argument("subsample: n must be in [1, " + std::to_string(total) +
                                    "], received " + std::to_string(n));
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(total));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < n; ++i) { // partial Fisher-Yates
        const auto j =
            i + static_cast<Eigen::Index>(rng.below(idx.size() - static_cast<std::size_t>(i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(n));
    return idx;
}

Dataset subsample(const Dataset& data, int n, Rng& rng) {
    const auto idx = subsample_indices(data.n(), n, rng);
    Dataset out;
    out.X.resize(n, data.dim());
    out.y.resize(n);
    for (int i = 0; i < n; ++i) {
        out.X.row(i) = data.X.row(idx[static_cast<std::size_t>(i)]);
        out.y[i] = data.y[idx[static_cast<std::size_t>(i)]];
    }
    return out;
}

} // namespace affinerf::io
