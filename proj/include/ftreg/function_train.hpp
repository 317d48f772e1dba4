#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ftreg/univariate.hpp"

namespace ftreg {

/// Rank vector [1, r1, ..., r_{d-1}, 1].
using RankVector = std::vector<int>;

RankVector uniform_ranks(int d, int interior_rank);
void validate_ranks(const RankVector& r);

/// One dimension's matrix-valued function: a rows x cols grid of univariate
/// functions, stored row-major.
class FTCore {
public:
    FTCore(int rows, int cols);

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    UnivariateParam& at(int i, int j) { return entries_[idx(i, j)]; }
    const UnivariateParam& at(int i, int j) const { return entries_[idx(i, j)]; }

    int num_params() const;

    /// Evaluates the grid at x into out, row-major rows x cols.
    void eval(double x, std::span<double> out) const;

    /// The shared basis if every non-constant entry is Linear over the same
    /// BasisSpec (and there is at least one); nullptr otherwise.
    const BasisSpec* shared_linear_basis() const;

private:
    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(i) * cols_ + j;
    }

    int rows_;
    int cols_;
    std::vector<UnivariateParam> entries_;
};

/// Flat parameter multi-index: parameter l of the univariate function in
/// row i, column j of core k.
struct ParamIndex {
    int k = 0;
    int i = 0;
    int j = 0;
    int l = 0;
};

/// Bijection between flat parameter slots and ParamIndex. Slot order is
/// fixed: k-major, then i, then j, then l; constants occupy no slots.
class ParamMap {
public:
    std::size_t total() const { return total_; }
    std::size_t core_offset(int k) const { return core_offsets_[k]; }
    std::size_t core_size(int k) const {
        return core_offsets_[k + 1] - core_offsets_[k];
    }
    std::size_t entry_offset(int k, int i, int j) const;
    ParamIndex index_of(std::size_t flat) const;

private:
    friend class FunctionTrain;

    std::size_t total_ = 0;
    std::vector<std::size_t> core_offsets_;          // d+1
    std::vector<std::vector<std::size_t>> entry_offsets_; // per core, rows*cols+1
    std::vector<int> cols_;                          // per core
};

/// Scratch buffers for eval/grad, reusable across evaluation points.
struct EvalWorkspace {
    std::vector<double> a;
    std::vector<double> b;
    std::vector<std::vector<double>> core_vals; // per-core matrices, row-major
    std::vector<double> c;
    std::vector<double> c2;
    std::vector<std::size_t> core_off; // gradient offset per core
};

/// Optional per-dimension precomputed basis rows for one evaluation point.
/// rows[k] empty means "evaluate directly"; non-empty means every Linear
/// entry of core k shares the basis those values were computed from.
struct BasisRows {
    std::vector<std::span<const double>> rows;
};

/// A low-rank function f(x) = F_1(x_1) F_2(x_2) ... F_d(x_d), where core k
/// maps x_k to an r_{k-1} x r_k matrix.
class FunctionTrain {
public:
    FunctionTrain(std::vector<FTCore> cores, std::vector<Interval> domains);

    int dim() const { return static_cast<int>(cores_.size()); }
    const RankVector& ranks() const { return ranks_; }
    const FTCore& core(int k) const { return cores_[k]; }
    FTCore& core(int k) { return cores_[k]; }
    const std::vector<Interval>& domains() const { return domains_; }

    std::size_t num_params() const;
    ParamMap param_map() const;

    double eval(std::span<const double> x) const;
    double eval(std::span<const double> x, EvalWorkspace& ws,
                const BasisRows* pre = nullptr) const;

    /// Value and full parameter gradient in a single forward/backward sweep.
    /// grad must have length num_params(); slot order matches pack_params().
    double eval_grad(std::span<const double> x, EvalWorkspace& ws,
                     std::span<double> grad,
                     const BasisRows* pre = nullptr) const;

    std::vector<double> pack_params() const;
    void set_params(std::span<const double> theta);
    FunctionTrain with_params(std::span<const double> theta) const;

private:
    std::vector<FTCore> cores_;
    std::vector<Interval> domains_;
    RankVector ranks_;
};

/// Intermediate gradient of one core: out[(i,j,l)] = a[i] * du_ij/dtheta_l,
/// blocks laid out row-major over (i, j) with l innermost. out length is
/// core.num_params().
void coregrad_left(const FTCore& core, double x, std::span<const double> a,
                   std::span<double> out);

/// Applies the right multiplier: partials[(i,j,l)] *= c[j].
void coregrad_right(const FTCore& core, std::span<const double> c,
                    std::span<double> partials);

/// Builds the rank-2 representation of f_1(x_1) + ... + f_d(x_d):
///   [f1 1] [[1 0],[f2 1]] ... [[1],[fd]]
/// Constant pattern slots are ConstZero/ConstOne tags carrying no parameters.
FunctionTrain additive_ft(std::vector<UnivariateParam> parts);
FunctionTrain additive_ft(std::vector<UnivariateParam> parts,
                          std::vector<Interval> domains);

/// A coefficient tensor-train core: left_rank x basis_size x right_rank,
/// data[(i * basis_size + l) * right_rank + j].
struct TTCore {
    int left_rank = 1;
    int basis_size = 0;
    int right_rank = 1;
    std::vector<double> data;

    double& at(int i, int l, int j) {
        return data[(static_cast<std::size_t>(i) * basis_size + l) * right_rank + j];
    }
    double at(int i, int l, int j) const {
        return data[(static_cast<std::size_t>(i) * basis_size + l) * right_rank + j];
    }
};

/// Expands coefficient TT cores over per-dimension bases into a
/// FunctionTrain whose (i,j) entry of core k is Linear with coefficients
/// tt[k](i, :, j).
FunctionTrain ftc_to_ft(std::span<const TTCore> tt_cores,
                        std::span<const BasisSpec> bases);

/// Inverse of ftc_to_ft for trains whose entries are all Linear over one
/// orthonormal Legendre basis per dimension (constants are expanded exactly).
/// Throws UnsupportedError otherwise.
std::vector<TTCore> ft_to_coeff_tt(const FunctionTrain& ft,
                                   std::vector<BasisSpec>* bases_out = nullptr);

/// Reapproximates ft with smaller ranks such that the relative L2 error
/// under the uniform product measure is at most delta.
FunctionTrain ft_round(const FunctionTrain& ft, double delta);

/// Ranks ft_round would produce, without building the rounded train.
RankVector ft_rounding_rank(const FunctionTrain& ft, double delta);

} // namespace ftreg
