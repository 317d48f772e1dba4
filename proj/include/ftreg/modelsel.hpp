#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ftreg/model_spec.hpp"
#include "ftreg/optimize.hpp"

namespace ftreg {

/// Which optimizer model selection uses for its inner fits.
struct FitConfig {
    OptimizerKind optimizer = OptimizerKind::Aao;
    OptimOptions opts;
};

/// Hyper-parameter search space for grid_search.
struct Hypergrid {
    BasisKind basis = BasisKind::Legendre;
    std::vector<int> ranks{2};
    std::vector<int> num_funcs{3};
    std::vector<double> widths{2.0};
    std::vector<double> lambdas{0.0};
    int folds = 20;
    std::uint64_t seed = 0;
};

struct CVRow {
    int rank = 1;
    int num_funcs = 1;
    double width = 1.0;
    double lambda = 0.0;
    double mean_mse = 0.0;
};

struct CVResult {
    std::vector<CVRow> rows;
    std::size_t winner = 0;
    std::vector<int> fold_of; // fold assignment per sample of the last split
};

/// Mean held-out MSE of k-fold cross validation for one hyper-parameter
/// combination. Folds are a seeded shuffle split into contiguous blocks.
double kfold_cv(const ModelSpec& spec, double lambda, const Dataset& data,
                int folds, std::uint64_t seed, const FitConfig& fit,
                std::vector<int>* fold_of = nullptr);

/// Exhaustive search over the Cartesian grid; the winner attains the minimum
/// mean MSE, ties broken toward smaller (rank, num_funcs, width, lambda).
CVResult grid_search(const Hypergrid& grid, const Dataset& data,
                     const FitConfig& fit);

struct AdaptOptions {
    double delta = 1e-5;    // rounding tolerance
    int r_max = 10;         // safeguard cap on interior ranks
    int folds = 20;
    std::uint64_t seed = 0;
    BasisKind basis = BasisKind::Legendre;
    int num_funcs = 3;
    double width_mult = 2.0;
    double lambda = 0.0;
};

struct AdaptStep {
    RankVector ranks;
    double cv_error = 0.0;
    std::string action;       // "grow", "cv-revert", "round-stop", "adopt-rounded", "rmax-stop"
    RankVector rounded_ranks; // set when rounding ran
    bool rounding_skipped = false;
};

struct AdaptResult {
    FunctionTrain model;
    std::vector<AdaptStep> trace;
};

/// Rank adaptation: starts from all-ones ranks and alternates uniform rank
/// increments, cross-validation checks, full-data fits, and rounding-based
/// termination tests. Stops when CV error increases (ranks revert by one),
/// when rounding lowers every interior rank, or at the r_max safeguard.
AdaptResult rank_adapt(const Dataset& data, const AdaptOptions& adapt,
                       const FitConfig& fit);

} // namespace ftreg
