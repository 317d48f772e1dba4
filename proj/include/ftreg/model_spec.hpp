#pragma once

#include <string>

#include "ftreg/dataset.hpp"
#include "ftreg/function_train.hpp"

namespace ftreg {

enum class BasisKind { Legendre, FixedKernel, MovingKernel };

const char* basis_name(BasisKind k);
BasisKind basis_from_name(const std::string& name);

/// Structural hyper-parameters of a model to be fit.
struct ModelSpec {
    BasisKind basis = BasisKind::Legendre;
    RankVector ranks;      // [1, r1, ..., r_{d-1}, 1]
    int num_funcs = 3;     // Legendre: basis size p (degree p-1); kernels: kernel count
    double width_mult = 2.0;
};

/// Kernel width rule sigma = w * n^(1/5) * std(column).
double kernel_width(double width_mult, int n, double column_std);

/// Kernel centers at uniform quantiles of the training column between the
/// 10th and 90th percentiles.
std::vector<double> kernel_centers(const Dataset& train, int k, int count);

/// Builds the model template for a spec over the training data: domains and
/// kernel placement come from the data, all coefficients start at zero.
FunctionTrain build_model(const ModelSpec& spec, const Dataset& train);

} // namespace ftreg
