#pragma once

#include <span>
#include <vector>

#include "ftreg/dataset.hpp"
#include "ftreg/function_train.hpp"

namespace ftreg {

/// Least-squares fit objective J(theta) = (1/n) sum_i (y_i - f(x_i; theta))^2
/// plus the group-sparsity regularizer
///   Omega(theta) = sum over univariate functions of <u, u>,
/// both with exact analytic gradients over the flat parameter vector.
///
/// Holds internal evaluation scratch; use one instance per concurrent fit.
/// Dimensions whose core entries all share one Linear basis get their basis
/// evaluations precomputed over the data once at construction.
class RegressionObjective {
public:
    RegressionObjective(const FunctionTrain& model_template, const Dataset& data,
                        double lambda);

    std::size_t num_params() const { return work_.num_params(); }
    const Dataset& data() const { return *data_; }
    double lambda() const { return lambda_; }

    /// The model carrying the most recently evaluated parameters.
    const FunctionTrain& model() const { return work_; }

    /// J and its gradient. grad may be empty to skip gradient work.
    double least_squares(std::span<const double> theta, std::span<double> grad);

    /// Omega and its gradient (not scaled by lambda).
    double regularizer(std::span<const double> theta, std::span<double> grad);

    /// J + lambda * Omega with summed gradients.
    double full(std::span<const double> theta, std::span<double> grad);

    /// Single-sample squared residual g_i = (y_i - f(x_i))^2 and gradient.
    /// The mean of g_i over all samples equals least_squares.
    double per_sample(std::span<const double> theta, int i, std::span<double> grad);

    /// Mean of g_i and of its gradient over a batch of sample indices.
    double batch(std::span<const double> theta, std::span<const int> indices,
                 std::span<double> grad);

private:
    void prepare(std::span<const double> theta);
    void rows_for(int i);
    double sample_eval_grad(int i, std::span<double> grad);

    FunctionTrain work_;
    const Dataset* data_;
    double lambda_;

    // per-dimension basis tables (n x p, row-major); empty when unavailable
    std::vector<std::vector<double>> tables_;
    std::vector<int> table_width_;

    // per-dimension Gram matrix of the shared basis, identity omitted
    std::vector<Eigen::MatrixXd> grams_;
    std::vector<bool> gram_is_identity_;

    EvalWorkspace ws_;
    BasisRows rows_;
    std::vector<double> grad_buf_;
    std::vector<double> reg_buf_;
};

} // namespace ftreg
