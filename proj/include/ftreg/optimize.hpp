#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ftreg/objective.hpp"

namespace ftreg {

enum class OptimizerKind { Aao, Sgd, Als };

const char* optimizer_name(OptimizerKind k);
OptimizerKind optimizer_from_name(const std::string& name);

struct SgdOptions {
    double learning_rate = 0.01; // decayed as eta / sqrt(t)
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int epochs = 200;
    int batch_size = 32;
    std::uint64_t shuffle_seed = 0;
};

struct AlsOptions {
    int max_sweeps = 50;
    double sweep_tol = 1e-13;     // Monte Carlo estimate of ||f_new - f_old||
    double ridge_jitter = 1e-10;  // added to the normal-equation diagonal
    int mc_points = 4096;
    std::uint64_t mc_seed = 12345;
    int nonlinear_core_iters = 60; // inner quasi-Newton budget per core
};

struct OptimOptions {
    int max_iters = 500;
    double obj_tol = 1e-13;
    double grad_tol = 1e-12;
    int lbfgs_memory = 10;
    SgdOptions sgd;
    AlsOptions als;

    void validate() const;
};

struct FitReport {
    double final_objective = 0.0;
    int iterations = 0; // iterations / epochs / sweeps
    bool converged = false;
    std::vector<double> trace; // objective per iteration, never empty
    std::string note;
};

struct FitResult {
    std::vector<double> params;
    FitReport report;
};

struct AlsFitResult {
    FunctionTrain model;
    FitReport report;
};

/// value = fn(theta, grad); grad has theta's length.
using ObjectiveFn =
    std::function<double(std::span<const double>, std::span<double>)>;

/// Limited-memory BFGS with backtracking Armijo line search. Returns the
/// best iterate seen; on line-search failure the report is flagged
/// non-converged.
FitResult lbfgs_minimize(const ObjectiveFn& fn, std::span<const double> theta0,
                         const OptimOptions& opts);

/// All-at-once fit: quasi-Newton over the full parameter vector.
FitResult fit_aao(RegressionObjective& obj, std::span<const double> theta0,
                  const OptimOptions& opts);

/// Minibatch stochastic gradient with ADAM moment estimates. Deterministic
/// given sgd.shuffle_seed; the trace holds the full objective per epoch.
FitResult fit_sgd(RegressionObjective& obj, std::span<const double> theta0,
                  const OptimOptions& opts);

/// One alternating-minimization core update: replaces core k's parameters by
/// the minimizer of the fit objective with all other cores fixed (a linear
/// solve for Linear cores, an inner quasi-Newton run otherwise). Returns the
/// training objective after the update.
double als_update_core(FunctionTrain& ft, const Dataset& data, double lambda,
                       int k, const OptimOptions& opts);

/// Alternating least squares: sweeps als_update_core over k = 1..d until the
/// Monte Carlo estimate of ||f_new - f_old|| drops below sweep_tol.
AlsFitResult fit_als(FunctionTrain ft0, const Dataset& data, double lambda,
                     const OptimOptions& opts);

/// Starting parameters for a model template: coefficients drawn i.i.d.
/// normal with scale 1/sqrt(r*p), the first core's constant slot set to the
/// training target mean, and moving-kernel centers placed at data quantiles.
std::vector<double> initial_params(const FunctionTrain& model_template,
                                   const Dataset& data, std::uint64_t seed);

} // namespace ftreg
