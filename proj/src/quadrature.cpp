#include "ftreg/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "ftreg/errors.hpp"

namespace ftreg {

namespace {

// Legendre P_n(x) and P_n'(x) via the three-term recurrence.
std::pair<double, double> legendre_pair(int n, double x) {
    double p0 = 1.0, p1 = x;
    if (n == 0) return {1.0, 0.0};
    for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    const double dp = n * (x * p1 - p0) / (x * x - 1.0);
    return {p1, dp};
}

QuadratureRule build_rule(int n) {
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Chebyshev-based initial guess, then Newton.
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double p, dp;
        for (int it = 0; it < 100; ++it) {
            std::tie(p, dp) = legendre_pair(n, x);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        std::tie(p, dp) = legendre_pair(n, x);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.weights[i] = w;
        rule.nodes[n - 1 - i] = x;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

} // namespace

const QuadratureRule& gauss_legendre(int n) {
    if (n < 1) throw ConfigError("quadrature order must be >= 1");
    static std::mutex mtx;
    static std::map<int, QuadratureRule> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, build_rule(n)).first;
    return it->second;
}

QuadratureRule gauss_legendre_on(int n, const Interval& domain) {
    domain.validate();
    const QuadratureRule& base = gauss_legendre(n);
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double mid = domain.midpoint();
    const double half = 0.5 * domain.width();
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = mid + half * base.nodes[i];
        rule.weights[i] = half * base.weights[i];
    }
    return rule;
}

} // namespace ftreg
