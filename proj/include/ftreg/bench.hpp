#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ftreg/dataset.hpp"
#include "ftreg/modelsel.hpp"

namespace ftreg {

/// A synthetic test function with known bounds.
struct BenchFunction {
    std::string name;
    int dim = 0;
    std::vector<Interval> bounds;
    double (*eval)(std::span<const double>) = nullptr;
};

/// Registered functions: "otl", "wingweight", "sinesum".
const BenchFunction& bench_function(const std::string& name);
std::vector<std::string> bench_function_names();

double otl_circuit(std::span<const double> x);
double wing_weight(std::span<const double> x);
double sine_of_sums(std::span<const double> x);

/// n x d matrix of i.i.d. per-dimension uniform draws.
DataMatrix sample_uniform(std::span<const Interval> bounds, int n,
                          std::uint64_t seed);

/// sum (model - truth)^2 / sum (truth - mean(truth))^2 over n_val fresh
/// uniform validation draws.
double relative_squared_error(
    const std::function<double(std::span<const double>)>& model,
    const std::function<double(std::span<const double>)>& truth,
    std::span<const Interval> bounds, int n_val, std::uint64_t seed);

/// Same ratio over fixed prediction/truth arrays.
double relative_squared_error(std::span<const double> predictions,
                              std::span<const double> truth);

/// A convergence study: (optimizer x sample size x realization) fit cells
/// over one benchmark function, scored on a shared validation set.
struct StudySpec {
    std::string function = "otl";
    std::vector<int> sample_sizes{200};
    int realizations = 20;
    std::vector<OptimizerKind> optimizers{OptimizerKind::Aao};
    ModelSpec model;          // ranks filled per function dimension if empty
    bool adaptive = false;    // rank adaptation instead of fixed ranks
    double delta = 1e-5;
    int adapt_folds = 5;
    int r_max = 10;
    double lambda = 0.0;
    int n_validation = 10000;
    std::uint64_t seed = 0;
    OptimOptions opts;
};

struct StudyRow {
    std::string function;
    std::string optimizer;
    int rank = 0;
    int num_funcs = 0;
    int n = 0;
    int realization = 0;
    double error = 0.0;
    double seconds = 0.0;
    bool failed = false;
};

struct StudySummaryRow {
    std::string function;
    std::string optimizer;
    int rank = 0;
    int num_funcs = 0;
    int n = 0;
    double q25 = 0.0;
    double q50 = 0.0;
    double q75 = 0.0;
    int count = 0;
};

struct StudyResult {
    std::vector<StudyRow> rows;
    std::vector<StudySummaryRow> summary;
};

/// Runs every cell (training data shared across optimizers within a cell so
/// comparisons are paired) and aggregates quantiles per cell group. Failed
/// fits are recorded and skipped in the summary.
StudyResult run_study(const StudySpec& spec);

std::string study_rows_csv(std::span<const StudyRow> rows);
std::string study_summary_csv(std::span<const StudySummaryRow> rows);

} // namespace ftreg
