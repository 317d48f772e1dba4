#include "ftreg/model_spec.hpp"

#include <cmath>

#include "ftreg/errors.hpp"

namespace ftreg {

const char* basis_name(BasisKind k) {
    switch (k) {
    case BasisKind::Legendre: return "legendre";
    case BasisKind::FixedKernel: return "kernel";
    case BasisKind::MovingKernel: return "moving-kernel";
    }
    return "?";
}

BasisKind basis_from_name(const std::string& name) {
    if (name == "legendre") return BasisKind::Legendre;
    if (name == "kernel") return BasisKind::FixedKernel;
    if (name == "moving-kernel") return BasisKind::MovingKernel;
    throw ConfigError("unknown basis '" + name +
                      "' (expected legendre|kernel|moving-kernel)");
}

double kernel_width(double width_mult, int n, double column_std) {
    if (!(width_mult > 0.0)) throw ConfigError("width multiplier must be > 0");
    return width_mult * std::pow(static_cast<double>(n), 0.2) * column_std;
}

std::vector<double> kernel_centers(const Dataset& train, int k, int count) {
    if (count < 1) throw ConfigError("kernel count must be >= 1");
    std::vector<double> centers(count);
    for (int l = 0; l < count; ++l) {
        const double q =
            count == 1
                ? 0.5
                : 0.1 + 0.8 * static_cast<double>(l) / static_cast<double>(count - 1);
        centers[l] = train.quantile(k, q);
    }
    return centers;
}

FunctionTrain build_model(const ModelSpec& spec, const Dataset& train) {
    if (spec.num_funcs < 1) throw ConfigError("num_funcs must be >= 1");
    RankVector ranks = spec.ranks;
    if (ranks.empty()) ranks = uniform_ranks(train.dim(), 2);
    validate_ranks(ranks);
    if (static_cast<int>(ranks.size()) != train.dim() + 1)
        throw ConfigError("rank vector length does not match data dimension");

    const int d = train.dim();
    std::vector<FTCore> cores;
    cores.reserve(d);
    for (int k = 0; k < d; ++k) {
        const Interval dom = train.domains()[k];
        FTCore core(ranks[k], ranks[k + 1]);
        for (int i = 0; i < core.rows(); ++i)
            for (int j = 0; j < core.cols(); ++j) {
                switch (spec.basis) {
                case BasisKind::Legendre: {
                    BasisSpec basis = BasisSpec::legendre(spec.num_funcs - 1, dom);
                    core.at(i, j) = UnivariateParam::linear(
                        std::move(basis), std::vector<double>(spec.num_funcs, 0.0));
                    break;
                }
                case BasisKind::FixedKernel: {
                    const double sigma = kernel_width(spec.width_mult, train.n(),
                                                      train.x_stats()[k].std);
                    BasisSpec basis = BasisSpec::fixed_kernel(
                        kernel_centers(train, k, spec.num_funcs), sigma, dom);
                    core.at(i, j) = UnivariateParam::linear(
                        std::move(basis), std::vector<double>(spec.num_funcs, 0.0));
                    break;
                }
                case BasisKind::MovingKernel: {
                    const double sigma = kernel_width(spec.width_mult, train.n(),
                                                      train.x_stats()[k].std);
                    core.at(i, j) = UnivariateParam::moving_kernel(
                        std::vector<double>(spec.num_funcs, 0.0),
                        kernel_centers(train, k, spec.num_funcs), sigma, dom);
                    break;
                }
                }
            }
        cores.push_back(std::move(core));
    }
    return FunctionTrain(std::move(cores), train.domains());
}

} // namespace ftreg
