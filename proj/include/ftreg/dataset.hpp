#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ftreg/interval.hpp"

namespace ftreg {

using DataMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ColumnStats {
    double mean = 0.0;
    double std = 1.0;
    bool constant = false; // zero variance; std clamped to 1
};

/// n x d inputs plus n targets, with per-column normalization statistics and
/// per-dimension domains (the min/max box of the stored inputs).
class Dataset {
public:
    /// Applies z-score normalization to every column (and the target) when
    /// normalize is set; zero-variance columns keep their values and are
    /// flagged. Domains are the per-column [min, max] after normalization.
    static Dataset from_arrays(DataMatrix X, Eigen::VectorXd y, bool normalize);

    /// Raw data with externally known domains (synthetic benchmarks).
    static Dataset from_arrays(DataMatrix X, Eigen::VectorXd y,
                               std::vector<Interval> domains);

    int n() const { return static_cast<int>(X_.rows()); }
    int dim() const { return static_cast<int>(X_.cols()); }

    std::span<const double> x_row(int i) const {
        return {X_.data() + static_cast<std::size_t>(i) * dim(),
                static_cast<std::size_t>(dim())};
    }
    double target(int i) const { return y_[i]; }
    const DataMatrix& X() const { return X_; }
    const Eigen::VectorXd& y() const { return y_; }

    bool normalized() const { return normalized_; }
    const std::vector<ColumnStats>& x_stats() const { return xstats_; }
    const ColumnStats& y_stats() const { return ystats_; }
    const std::vector<Interval>& domains() const { return domains_; }

    std::vector<double> column(int k) const;

    /// Empirical quantile of column k (linear interpolation between order
    /// statistics).
    double quantile(int k, double q) const;

    double target_mean() const;

    /// Row subset; keeps the parent's stats and domains so models built on a
    /// fold see the same coordinate system as the full data.
    Dataset subset(std::span<const int> rows) const;

private:
    DataMatrix X_;
    Eigen::VectorXd y_;
    std::vector<ColumnStats> xstats_;
    ColumnStats ystats_;
    std::vector<Interval> domains_;
    bool normalized_ = false;
};

/// Reads a CSV file with a header row into a Dataset. target_column selects
/// the target by header name; empty means the last column. All remaining
/// columns become features, in file order.
Dataset ingest_csv(const std::string& path, const std::string& target_column,
                   bool normalize);

/// CSV parsing on an in-memory string (same rules as ingest_csv).
Dataset ingest_csv_text(const std::string& text, const std::string& target_column,
                        bool normalize);

} // namespace ftreg
