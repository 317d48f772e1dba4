#include "ftreg/objective.hpp"

#include <cmath>

#include "ftreg/quadrature.hpp"

namespace ftreg {

namespace {

constexpr int kRegQuadOrder = 200;

} // namespace

RegressionObjective::RegressionObjective(const FunctionTrain& model_template,
                                         const Dataset& data, double lambda)
    : work_(model_template), data_(&data), lambda_(lambda) {
    if (lambda < 0.0) throw ConfigError("regularization weight must be >= 0");
    if (work_.dim() != data.dim())
        throw InputError("model dimension does not match data dimension");

    const int d = work_.dim();
    tables_.resize(d);
    table_width_.assign(d, 0);
    grams_.resize(d);
    gram_is_identity_.assign(d, true);
    rows_.rows.resize(d);

    for (int k = 0; k < d; ++k) {
        const BasisSpec* shared = work_.core(k).shared_linear_basis();
        if (!shared) continue;
        const int p = shared->size();
        table_width_[k] = p;
        auto& table = tables_[k];
        table.resize(static_cast<std::size_t>(data.n()) * p);
        std::vector<double> row(p);
        for (int i = 0; i < data.n(); ++i) {
            shared->eval_all(data.x_row(i)[k], row);
            std::copy(row.begin(), row.end(),
                      table.begin() + static_cast<std::size_t>(i) * p);
        }
        if (shared->kind() != BasisSpec::Kind::Legendre) {
            grams_[k] = shared->gram();
            gram_is_identity_[k] = false;
        }
    }
    grad_buf_.resize(work_.num_params());
    reg_buf_.resize(work_.num_params());
}

void RegressionObjective::prepare(std::span<const double> theta) {
    work_.set_params(theta);
}

void RegressionObjective::rows_for(int i) {
    for (int k = 0; k < work_.dim(); ++k) {
        if (table_width_[k] > 0)
            rows_.rows[k] = std::span<const double>(
                tables_[k].data() + static_cast<std::size_t>(i) * table_width_[k],
                static_cast<std::size_t>(table_width_[k]));
        else
            rows_.rows[k] = {};
    }
}

double RegressionObjective::sample_eval_grad(int i, std::span<double> grad) {
    rows_for(i);
    return work_.eval_grad(data_->x_row(i), ws_, grad, &rows_);
}

double RegressionObjective::least_squares(std::span<const double> theta,
                                          std::span<double> grad) {
    prepare(theta);
    const int n = data_->n();
    const bool want_grad = !grad.empty();
    if (want_grad && grad.size() != num_params())
        throw InputError("gradient buffer length mismatch");
    if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);

    double sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        double value;
        if (want_grad) {
            value = sample_eval_grad(i, grad_buf_);
        } else {
            rows_for(i);
            value = work_.eval(data_->x_row(i), ws_, &rows_);
        }
        const double r = data_->target(i) - value;
        sum_sq += r * r;
        if (want_grad)
            for (std::size_t a = 0; a < grad.size(); ++a)
                grad[a] += r * grad_buf_[a];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    if (want_grad)
        for (auto& g : grad) g *= -2.0 * inv_n;
    return sum_sq * inv_n;
}

double RegressionObjective::regularizer(std::span<const double> theta,
                                        std::span<double> grad) {
    prepare(theta);
    const bool want_grad = !grad.empty();
    if (want_grad && grad.size() != num_params())
        throw InputError("gradient buffer length mismatch");
    if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);

    double omega = 0.0;
    std::size_t off = 0;
    for (int k = 0; k < work_.dim(); ++k) {
        const FTCore& core = work_.core(k);
        const Interval& dom = work_.domains()[k];
        const BasisSpec* shared = core.shared_linear_basis();
        for (int i = 0; i < core.rows(); ++i)
            for (int j = 0; j < core.cols(); ++j) {
                const UnivariateParam& u = core.at(i, j);
                const int p = u.num_params();
                if (p == 0) continue;
                const std::span<const double> th = u.params();
                std::span<double> slot =
                    want_grad ? grad.subspan(off, p) : std::span<double>{};
                if (u.kind() == UnivariateParam::Kind::Linear &&
                    u.basis().kind() == BasisSpec::Kind::Legendre) {
                    // Orthonormal basis: <u,u> = theta'theta.
                    for (int l = 0; l < p; ++l) {
                        omega += th[l] * th[l];
                        if (want_grad) slot[l] = 2.0 * th[l];
                    }
                } else if (u.kind() == UnivariateParam::Kind::Linear) {
                    const bool cached =
                        !gram_is_identity_[k] && shared && u.basis() == *shared;
                    const Eigen::MatrixXd g = cached ? grams_[k] : u.basis().gram();
                    for (int a = 0; a < p; ++a) {
                        double ga = 0.0;
                        for (int b = 0; b < p; ++b) ga += g(a, b) * th[b];
                        omega += th[a] * ga;
                        if (want_grad) slot[a] = 2.0 * ga;
                    }
                } else {
                    // Moving kernels: <u,u> and 2<du/dtheta, u> by quadrature.
                    const QuadratureRule rule = gauss_legendre_on(kRegQuadOrder, dom);
                    const double inv_width = 1.0 / dom.width();
                    std::vector<double> gq(p);
                    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                        const double w = rule.weights[q] * inv_width;
                        const double v = u.eval_grad(rule.nodes[q], gq);
                        omega += w * v * v;
                        if (want_grad)
                            for (int l = 0; l < p; ++l) slot[l] += 2.0 * w * v * gq[l];
                    }
                }
                off += p;
            }
    }
    return omega;
}

double RegressionObjective::full(std::span<const double> theta,
                                 std::span<double> grad) {
    const double j = least_squares(theta, grad);
    if (lambda_ == 0.0) return j;
    std::span<double> reg = grad.empty() ? std::span<double>{} : std::span<double>(reg_buf_);
    const double omega = regularizer(theta, reg);
    if (!grad.empty())
        for (std::size_t a = 0; a < grad.size(); ++a)
            grad[a] += lambda_ * reg_buf_[a];
    return j + lambda_ * omega;
}

double RegressionObjective::per_sample(std::span<const double> theta, int i,
                                       std::span<double> grad) {
    if (i < 0 || i >= data_->n()) throw InputError("sample index out of range");
    prepare(theta);
    const bool want_grad = !grad.empty();
    double value;
    if (want_grad) {
        value = sample_eval_grad(i, grad);
    } else {
        rows_for(i);
        value = work_.eval(data_->x_row(i), ws_, &rows_);
    }
    const double r = data_->target(i) - value;
    if (want_grad)
        for (auto& g : grad) g *= -2.0 * r;
    return r * r;
}

double RegressionObjective::batch(std::span<const double> theta,
                                  std::span<const int> indices,
                                  std::span<double> grad) {
    if (indices.empty()) throw InputError("batch needs >= 1 sample");
    prepare(theta);
    const bool want_grad = !grad.empty();
    if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
    double sum = 0.0;
    for (int i : indices) {
        if (i < 0 || i >= data_->n()) throw InputError("sample index out of range");
        double value;
        if (want_grad) {
            value = sample_eval_grad(i, grad_buf_);
        } else {
            rows_for(i);
            value = work_.eval(data_->x_row(i), ws_, &rows_);
        }
        const double r = data_->target(i) - value;
        sum += r * r;
        if (want_grad)
            for (std::size_t a = 0; a < grad.size(); ++a)
                grad[a] += r * grad_buf_[a];
    }
    const double inv_b = 1.0 / static_cast<double>(indices.size());
    if (want_grad)
        for (auto& g : grad) g *= -2.0 * inv_b;
    return sum * inv_b;
}

} // namespace ftreg
