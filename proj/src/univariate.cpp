#include "ftreg/univariate.hpp"

#include <atomic>
#include <cmath>

#include "ftreg/quadrature.hpp"

namespace ftreg {

namespace {

std::atomic<std::uint64_t> g_clamp_warnings{0};

constexpr int kInnerProductQuadOrder = 200;

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace

std::uint64_t clamp_warning_count() { return g_clamp_warnings.load(); }
void reset_clamp_warnings() { g_clamp_warnings.store(0); }

// ---------------------------------------------------------------------------
// BasisSpec

BasisSpec BasisSpec::legendre(int degree, Interval domain) {
    domain.validate();
    if (degree < 0) throw ConfigError("legendre degree must be >= 0");
    BasisSpec b;
    b.kind_ = Kind::Legendre;
    b.degree_ = degree;
    b.domain_ = domain;
    return b;
}

BasisSpec BasisSpec::fixed_kernel(std::vector<double> centers, double width,
                                  Interval domain) {
    domain.validate();
    if (centers.empty()) throw ConfigError("kernel basis needs >= 1 center");
    if (!(width > 0.0)) throw ConfigError("kernel width must be > 0");
    BasisSpec b;
    b.kind_ = Kind::FixedKernel;
    b.centers_ = std::move(centers);
    b.width_ = width;
    b.domain_ = domain;
    return b;
}

int BasisSpec::size() const {
    return kind_ == Kind::Legendre ? degree_ + 1
                                   : static_cast<int>(centers_.size());
}

void BasisSpec::eval_all(double x, std::span<double> out) const {
    if (!std::isfinite(x)) throw InputError("basis evaluation at non-finite x");
    if (x < domain_.lo || x > domain_.hi) {
        x = domain_.clamp(x);
        g_clamp_warnings.fetch_add(1, std::memory_order_relaxed);
    }
    if (kind_ == Kind::Legendre) {
        // Legendre polynomials mapped to the domain and scaled by
        // sqrt(2l+1), orthonormal under the uniform probability measure.
        const double t = (2.0 * x - domain_.lo - domain_.hi) / domain_.width();
        double p0 = 1.0, p1 = t;
        out[0] = 1.0;
        if (degree_ >= 1) out[1] = std::sqrt(3.0) * t;
        for (int l = 2; l <= degree_; ++l) {
            const double p2 = ((2 * l - 1) * t * p1 - (l - 1) * p0) / l;
            out[l] = std::sqrt(2.0 * l + 1.0) * p2;
            p0 = p1;
            p1 = p2;
        }
    } else {
        const double inv = 1.0 / (width_ * width_);
        for (std::size_t l = 0; l < centers_.size(); ++l) {
            const double dx = x - centers_[l];
            out[l] = std::exp(-dx * dx * inv);
        }
    }
}

Eigen::MatrixXd BasisSpec::gram() const {
    const int p = size();
    if (kind_ == Kind::Legendre) return Eigen::MatrixXd::Identity(p, p);
    const QuadratureRule rule = gauss_legendre_on(kInnerProductQuadOrder, domain_);
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(p, p);
    std::vector<double> phi(p);
    const double inv_width = 1.0 / domain_.width();
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        eval_all(rule.nodes[q], phi);
        const double w = rule.weights[q] * inv_width;
        for (int i = 0; i < p; ++i)
            for (int j = 0; j <= i; ++j) g(i, j) += w * phi[i] * phi[j];
    }
    for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j) g(i, j) = g(j, i);
    return g;
}

bool BasisSpec::operator==(const BasisSpec& o) const {
    if (kind_ != o.kind_ || !(domain_ == o.domain_)) return false;
    if (kind_ == Kind::Legendre) return degree_ == o.degree_;
    return centers_ == o.centers_ && width_ == o.width_;
}

// ---------------------------------------------------------------------------
// UnivariateParam

UnivariateParam UnivariateParam::zero() {
    UnivariateParam u;
    u.kind_ = Kind::ConstZero;
    return u;
}

UnivariateParam UnivariateParam::one() {
    UnivariateParam u;
    u.kind_ = Kind::ConstOne;
    return u;
}

UnivariateParam UnivariateParam::linear(BasisSpec basis,
                                        std::vector<double> coeffs) {
    if (static_cast<int>(coeffs.size()) != basis.size())
        throw ConfigError("coefficient count does not match basis size");
    UnivariateParam u;
    u.kind_ = Kind::Linear;
    u.domain_ = basis.domain();
    u.basis_ = std::move(basis);
    u.theta_ = std::move(coeffs);
    return u;
}

UnivariateParam UnivariateParam::moving_kernel(std::vector<double> coeffs,
                                               std::vector<double> centers,
                                               double width, Interval domain) {
    domain.validate();
    if (coeffs.empty() || coeffs.size() != centers.size())
        throw ConfigError("moving kernel needs equal, nonzero coefficient and center counts");
    if (!(width > 0.0)) throw ConfigError("kernel width must be > 0");
    UnivariateParam u;
    u.kind_ = Kind::MovingKernel;
    u.width_ = width;
    u.domain_ = domain;
    u.theta_ = std::move(coeffs);
    u.theta_.insert(u.theta_.end(), centers.begin(), centers.end());
    return u;
}

const Interval& UnivariateParam::domain() const {
    if (is_const()) throw ConfigError("constant function carries no domain");
    return domain_;
}

const BasisSpec& UnivariateParam::basis() const {
    if (kind_ != Kind::Linear) throw ConfigError("basis() requires a Linear function");
    return basis_;
}

double UnivariateParam::kernel_width() const {
    if (kind_ != Kind::MovingKernel)
        throw ConfigError("kernel_width() requires a MovingKernel function");
    return width_;
}

double UnivariateParam::eval(double x) const {
    if (!std::isfinite(x)) throw InputError("evaluation at non-finite x");
    switch (kind_) {
    case Kind::ConstZero: return 0.0;
    case Kind::ConstOne: return 1.0;
    case Kind::Linear: {
        const int p = num_params();
        double stack[64];
        std::vector<double> heap;
        std::span<double> phi;
        if (p <= 64) {
            phi = std::span<double>(stack, p);
        } else {
            heap.resize(p);
            phi = heap;
        }
        basis_.eval_all(x, phi);
        return dot(theta_, phi);
    }
    case Kind::MovingKernel: {
        const std::size_t m = theta_.size() / 2;
        const double inv = 1.0 / (width_ * width_);
        double s = 0.0;
        for (std::size_t l = 0; l < m; ++l) {
            const double dx = x - theta_[m + l];
            s += theta_[l] * std::exp(-dx * dx * inv);
        }
        return s;
    }
    }
    return 0.0;
}

void UnivariateParam::grad(double x, std::span<double> out) const {
    eval_grad(x, out);
}

double UnivariateParam::eval_grad(double x, std::span<double> out) const {
    if (!std::isfinite(x)) throw InputError("evaluation at non-finite x");
    switch (kind_) {
    case Kind::ConstZero: return 0.0;
    case Kind::ConstOne: return 1.0;
    case Kind::Linear:
        basis_.eval_all(x, out);
        return dot(theta_, out);
    case Kind::MovingKernel: {
        const std::size_t m = theta_.size() / 2;
        const double inv = 1.0 / (width_ * width_);
        double s = 0.0;
        for (std::size_t l = 0; l < m; ++l) {
            const double dx = x - theta_[m + l];
            const double k = std::exp(-dx * dx * inv);
            s += theta_[l] * k;
            out[l] = k;
            out[m + l] = 2.0 * inv * theta_[l] * dx * k;
        }
        return s;
    }
    }
    return 0.0;
}

void UnivariateParam::set_params(std::span<const double> theta) {
    if (theta.size() != theta_.size())
        throw InputError("parameter count mismatch in set_params");
    std::copy(theta.begin(), theta.end(), theta_.begin());
}

UnivariateParam UnivariateParam::with_params(std::span<const double> theta) const {
    UnivariateParam u = *this;
    u.set_params(theta);
    return u;
}

// ---------------------------------------------------------------------------
// Inner products and precomputation

double inner_product(const UnivariateParam& u1, const UnivariateParam& u2,
                     const Interval& domain) {
    domain.validate();
    for (const UnivariateParam* u : {&u1, &u2}) {
        if (u->has_domain() && !(u->domain() == domain))
            throw ConfigError("inner product domain does not match function domain");
    }
    if (u1.kind() == UnivariateParam::Kind::ConstZero ||
        u2.kind() == UnivariateParam::Kind::ConstZero)
        return 0.0;
    if (u1.kind() == UnivariateParam::Kind::ConstOne &&
        u2.kind() == UnivariateParam::Kind::ConstOne)
        return 1.0;
    if (u1.kind() == UnivariateParam::Kind::Linear &&
        u2.kind() == UnivariateParam::Kind::Linear &&
        u1.basis().kind() == BasisSpec::Kind::Legendre &&
        u1.basis() == u2.basis()) {
        return dot(u1.params(), u2.params());
    }
    const QuadratureRule rule = gauss_legendre_on(kInnerProductQuadOrder, domain);
    const double inv_width = 1.0 / domain.width();
    double s = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q)
        s += rule.weights[q] * inv_width * u1.eval(rule.nodes[q]) * u2.eval(rule.nodes[q]);
    return s;
}

Eigen::MatrixXd precompute_basis(const BasisSpec& basis,
                                 std::span<const double> column) {
    const int p = basis.size();
    Eigen::MatrixXd out(column.size(), p);
    std::vector<double> row(p);
    for (std::size_t i = 0; i < column.size(); ++i) {
        basis.eval_all(column[i], row);
        for (int l = 0; l < p; ++l) out(static_cast<Eigen::Index>(i), l) = row[l];
    }
    return out;
}

Eigen::MatrixXd precompute_basis(const UnivariateParam& u,
                                 std::span<const double> column) {
    if (u.kind() != UnivariateParam::Kind::Linear)
        throw UnsupportedError(
            "precompute requires a Linear parameterization; gradients of "
            "moving-kernel functions depend on the parameter values");
    return precompute_basis(u.basis(), column);
}

} // namespace ftreg
