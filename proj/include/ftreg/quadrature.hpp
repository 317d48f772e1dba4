#pragma once

#include <vector>

#include "ftreg/interval.hpp"

namespace ftreg {

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Cached n-point Gauss-Legendre rule on [-1, 1].
const QuadratureRule& gauss_legendre(int n);

/// Rule mapped onto [a, b]; weights sum to b - a.
QuadratureRule gauss_legendre_on(int n, const Interval& domain);

} // namespace ftreg
