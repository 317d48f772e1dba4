#include "ftreg/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ftreg/errors.hpp"

namespace ftreg {

namespace {

void compute_stats(Eigen::Ref<Eigen::VectorXd> col, ColumnStats& stats,
                   bool normalize) {
    const auto n = static_cast<double>(col.size());
    stats.mean = col.sum() / n;
    double var = 0.0;
    for (Eigen::Index i = 0; i < col.size(); ++i) {
        const double d = col[i] - stats.mean;
        var += d * d;
    }
    stats.std = std::sqrt(var / n);
    stats.constant = !(stats.std > 0.0);
    if (stats.constant) stats.std = 1.0;
    if (normalize)
        for (Eigen::Index i = 0; i < col.size(); ++i)
            col[i] = (col[i] - stats.mean) / stats.std;
}

Interval column_domain(const Eigen::Ref<const Eigen::VectorXd>& col) {
    double lo = col.minCoeff();
    double hi = col.maxCoeff();
    if (!(lo < hi)) {
        lo -= 0.5;
        hi += 0.5;
    }
    return Interval{lo, hi};
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double parse_cell(const std::string& cell, int row, int col) {
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
        std::ostringstream msg;
        msg << "unparseable numeric cell '" << cell << "' at row " << row
            << ", column " << col;
        throw DataError(msg.str());
    }
    return value;
}

} // namespace

Dataset Dataset::from_arrays(DataMatrix X, Eigen::VectorXd y, bool normalize) {
    if (X.rows() < 1 || X.rows() != y.size())
        throw InputError("dataset needs n >= 1 rows with matching targets");
    Dataset ds;
    ds.X_ = std::move(X);
    ds.y_ = std::move(y);
    ds.normalized_ = normalize;
    ds.xstats_.resize(ds.dim());
    for (int k = 0; k < ds.dim(); ++k) {
        Eigen::VectorXd col = ds.X_.col(k);
        compute_stats(col, ds.xstats_[k], normalize);
        if (normalize) ds.X_.col(k) = col;
    }
    {
        Eigen::VectorXd col = ds.y_;
        compute_stats(col, ds.ystats_, normalize);
        if (normalize) ds.y_ = col;
    }
    ds.domains_.resize(ds.dim());
    for (int k = 0; k < ds.dim(); ++k)
        ds.domains_[k] = column_domain(ds.X_.col(k));
    return ds;
}

Dataset Dataset::from_arrays(DataMatrix X, Eigen::VectorXd y,
                             std::vector<Interval> domains) {
    if (static_cast<int>(domains.size()) != X.cols())
        throw InputError("one domain per input dimension required");
    Dataset ds = from_arrays(std::move(X), std::move(y), false);
    for (auto& dom : domains) dom.validate();
    ds.domains_ = std::move(domains);
    return ds;
}

std::vector<double> Dataset::column(int k) const {
    std::vector<double> col(n());
    for (int i = 0; i < n(); ++i) col[i] = X_(i, k);
    return col;
}

double Dataset::quantile(int k, double q) const {
    std::vector<double> col = column(k);
    std::sort(col.begin(), col.end());
    if (col.size() == 1) return col[0];
    const double h = q * static_cast<double>(col.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, col.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return col[lo] + frac * (col[hi] - col[lo]);
}

double Dataset::target_mean() const { return y_.sum() / static_cast<double>(n()); }

Dataset Dataset::subset(std::span<const int> rows) const {
    if (rows.empty()) throw InputError("subset needs >= 1 row");
    Dataset ds;
    ds.X_.resize(rows.size(), dim());
    ds.y_.resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] < 0 || rows[r] >= n()) throw InputError("subset row out of range");
        ds.X_.row(r) = X_.row(rows[r]);
        ds.y_[static_cast<Eigen::Index>(r)] = y_[rows[r]];
    }
    ds.xstats_ = xstats_;
    ds.ystats_ = ystats_;
    ds.domains_ = domains_;
    ds.normalized_ = normalized_;
    return ds;
}

Dataset ingest_csv_text(const std::string& text, const std::string& target_column,
                        bool normalize) {
    std::stringstream ss(text);
    std::string line;
    if (!std::getline(ss, line)) throw DataError("empty CSV input");
    const std::vector<std::string> header = split_csv_line(line);
    if (header.size() < 2)
        throw DataError("CSV needs at least one feature column and one target");

    int target = static_cast<int>(header.size()) - 1;
    if (!target_column.empty()) {
        const auto it = std::find(header.begin(), header.end(), target_column);
        if (it == header.end())
            throw ConfigError("target column '" + target_column + "' not found in header");
        target = static_cast<int>(it - header.begin());
    }

    std::vector<std::vector<double>> rows;
    int lineno = 1;
    while (std::getline(ss, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            std::ostringstream msg;
            msg << "row " << lineno << " has " << cells.size()
                << " cells, expected " << header.size();
            throw DataError(msg.str());
        }
        std::vector<double> row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c)
            row[c] = parse_cell(cells[c], lineno, static_cast<int>(c) + 1);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("CSV has a header but no data rows");

    const int d = static_cast<int>(header.size()) - 1;
    DataMatrix X(rows.size(), d);
    Eigen::VectorXd y(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        int out = 0;
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            if (static_cast<int>(c) == target)
                y[static_cast<Eigen::Index>(r)] = rows[r][c];
            else
                X(static_cast<Eigen::Index>(r), out++) = rows[r][c];
        }
    }
    return Dataset::from_arrays(std::move(X), std::move(y), normalize);
}

Dataset ingest_csv(const std::string& path, const std::string& target_column,
                   bool normalize) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return ingest_csv_text(buffer.str(), target_column, normalize);
}

} // namespace ftreg
