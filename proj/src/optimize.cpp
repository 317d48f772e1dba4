#include "ftreg/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include <Eigen/Dense>

#include "ftreg/quadrature.hpp"
#include "ftreg/rng.hpp"

namespace ftreg {

const char* optimizer_name(OptimizerKind k) {
    switch (k) {
    case OptimizerKind::Aao: return "aao";
    case OptimizerKind::Sgd: return "sgd";
    case OptimizerKind::Als: return "als";
    }
    return "?";
}

OptimizerKind optimizer_from_name(const std::string& name) {
    if (name == "aao") return OptimizerKind::Aao;
    if (name == "sgd") return OptimizerKind::Sgd;
    if (name == "als") return OptimizerKind::Als;
    throw ConfigError("unknown optimizer '" + name + "' (expected aao|sgd|als)");
}

void OptimOptions::validate() const {
    if (max_iters < 0) throw ConfigError("max_iters must be >= 0");
    if (!(obj_tol > 0.0) || !(grad_tol > 0.0))
        throw ConfigError("tolerances must be > 0");
    if (lbfgs_memory < 1) throw ConfigError("lbfgs memory must be >= 1");
    if (sgd.beta1 < 0.0 || sgd.beta1 >= 1.0 || sgd.beta2 < 0.0 || sgd.beta2 >= 1.0)
        throw ConfigError("ADAM betas must lie in [0, 1)");
    if (sgd.batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (sgd.epochs < 0) throw ConfigError("epochs must be >= 0");
    if (als.max_sweeps < 1) throw ConfigError("max_sweeps must be >= 1");
    if (!(als.sweep_tol > 0.0)) throw ConfigError("sweep_tol must be > 0");
    if (als.ridge_jitter < 0.0) throw ConfigError("ridge_jitter must be >= 0");
    if (als.mc_points < 1) throw ConfigError("mc_points must be >= 1");
}

namespace {

double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double vdot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace

// ---------------------------------------------------------------------------
// L-BFGS

FitResult lbfgs_minimize(const ObjectiveFn& fn, std::span<const double> theta0,
                         const OptimOptions& opts) {
    opts.validate();
    const std::size_t dim = theta0.size();
    FitResult result;
    result.params.assign(theta0.begin(), theta0.end());
    std::vector<double>& theta = result.params;

    std::vector<double> grad(dim), theta_new(dim), grad_new(dim), dir(dim);
    double f = fn(theta, grad);
    result.report.trace.push_back(f);

    std::vector<double> best_theta = theta;
    double best_f = f;

    if (dim == 0 || opts.max_iters == 0) {
        result.report.final_objective = f;
        result.report.converged = true;
        return result;
    }
    if (inf_norm(grad) <= opts.grad_tol) {
        result.report.final_objective = f;
        result.report.converged = true;
        result.report.note = "stationary start";
        return result;
    }

    std::deque<std::vector<double>> s_hist, y_hist;
    std::deque<double> rho_hist;
    std::vector<double> alpha(opts.lbfgs_memory);

    const double c1 = 1e-4;
    bool converged = false;
    int iter = 0;
    for (; iter < opts.max_iters; ++iter) {
        // Two-loop recursion for dir = -H * grad.
        dir.assign(grad.begin(), grad.end());
        const int m = static_cast<int>(s_hist.size());
        for (int h = m - 1; h >= 0; --h) {
            alpha[h] = rho_hist[h] * vdot(s_hist[h], dir);
            for (std::size_t a = 0; a < dim; ++a) dir[a] -= alpha[h] * y_hist[h][a];
        }
        if (m > 0) {
            const double gamma = vdot(s_hist[m - 1], y_hist[m - 1]) /
                                 vdot(y_hist[m - 1], y_hist[m - 1]);
            for (auto& v : dir) v *= gamma;
        }
        for (int h = 0; h < m; ++h) {
            const double beta = rho_hist[h] * vdot(y_hist[h], dir);
            for (std::size_t a = 0; a < dim; ++a)
                dir[a] += (alpha[h] - beta) * s_hist[h][a];
        }
        for (auto& v : dir) v = -v;

        double slope = vdot(grad, dir);
        if (!(slope < 0.0)) {
            // Fall back to steepest descent.
            for (std::size_t a = 0; a < dim; ++a) dir[a] = -grad[a];
            slope = -vdot(grad, grad);
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
        }

        double step = (m == 0) ? std::min(1.0, 1.0 / std::max(1e-12, inf_norm(grad)))
                               : 1.0;
        double f_new = f;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t a = 0; a < dim; ++a)
                theta_new[a] = theta[a] + step * dir[a];
            f_new = fn(theta_new, grad_new);
            if (std::isfinite(f_new) && f_new <= f + c1 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            result.report.note = "line search failed";
            break;
        }

        // Curvature pair; skipped when it would break positive definiteness.
        std::vector<double> s(dim), ynew(dim);
        for (std::size_t a = 0; a < dim; ++a) {
            s[a] = theta_new[a] - theta[a];
            ynew[a] = grad_new[a] - grad[a];
        }
        const double sy = vdot(s, ynew);
        if (sy > 1e-12 * std::sqrt(vdot(s, s)) * std::sqrt(vdot(ynew, ynew))) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(ynew));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opts.lbfgs_memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }

        const double f_prev = f;
        theta.swap(theta_new);
        grad.swap(grad_new);
        f = f_new;
        result.report.trace.push_back(f);
        if (f < best_f) {
            best_f = f;
            best_theta = theta;
        }
        if (inf_norm(grad) <= opts.grad_tol || std::abs(f_prev - f) <= opts.obj_tol) {
            converged = true;
            ++iter;
            break;
        }
    }

    result.params = best_theta;
    result.report.final_objective = best_f;
    result.report.iterations = iter;
    result.report.converged = converged;
    if (result.report.trace.back() != best_f) result.report.trace.push_back(best_f);
    return result;
}

FitResult fit_aao(RegressionObjective& obj, std::span<const double> theta0,
                  const OptimOptions& opts) {
    if (theta0.size() != obj.num_params())
        throw InputError("theta0 length does not match objective");
    return lbfgs_minimize(
        [&obj](std::span<const double> th, std::span<double> g) {
            return obj.full(th, g);
        },
        theta0, opts);
}

// ---------------------------------------------------------------------------
// SGD / ADAM

FitResult fit_sgd(RegressionObjective& obj, std::span<const double> theta0,
                  const OptimOptions& opts) {
    opts.validate();
    if (theta0.size() != obj.num_params())
        throw InputError("theta0 length does not match objective");
    const SgdOptions& sgd = opts.sgd;
    const std::size_t dim = theta0.size();
    const int n = obj.data().n();

    FitResult result;
    result.params.assign(theta0.begin(), theta0.end());
    std::vector<double>& theta = result.params;

    std::vector<double> g(dim), reg(dim), m1(dim, 0.0), m2(dim, 0.0);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(sgd.shuffle_seed);

    double f = obj.full(theta, {});
    result.report.trace.push_back(f);

    const double lambda = obj.lambda();
    double beta1_t = 1.0, beta2_t = 1.0;
    long step_count = 0;
    int epoch = 0;
    for (; epoch < sgd.epochs; ++epoch) {
        rng.shuffle(order);
        for (int start = 0; start < n; start += sgd.batch_size) {
            const int len = std::min(sgd.batch_size, n - start);
            obj.batch(theta, std::span<const int>(order.data() + start,
                                                  static_cast<std::size_t>(len)),
                      g);
            if (lambda > 0.0) {
                obj.regularizer(theta, reg);
                for (std::size_t a = 0; a < dim; ++a) g[a] += lambda * reg[a];
            }
            ++step_count;
            beta1_t *= sgd.beta1;
            beta2_t *= sgd.beta2;
            const double eta =
                sgd.learning_rate / std::sqrt(static_cast<double>(step_count));
            for (std::size_t a = 0; a < dim; ++a) {
                m1[a] = sgd.beta1 * m1[a] + (1.0 - sgd.beta1) * g[a];
                m2[a] = sgd.beta2 * m2[a] + (1.0 - sgd.beta2) * g[a] * g[a];
                const double mhat = m1[a] / (1.0 - beta1_t);
                const double vhat = m2[a] / (1.0 - beta2_t);
                theta[a] -= eta * mhat / (std::sqrt(vhat) + sgd.epsilon);
            }
        }
        const double f_new = obj.full(theta, {});
        result.report.trace.push_back(f_new);
        if (std::abs(f - f_new) <= opts.obj_tol) {
            f = f_new;
            result.report.converged = true;
            ++epoch;
            break;
        }
        f = f_new;
    }
    result.report.final_objective = f;
    result.report.iterations = epoch;
    return result;
}

// ---------------------------------------------------------------------------
// ALS

namespace {

// Left products F_1(x_1)...F_{k-1}(x_{k-1}) per sample (row vectors).
std::vector<std::vector<double>> left_products(const FunctionTrain& ft,
                                               const Dataset& data, int k) {
    const int n = data.n();
    std::vector<std::vector<double>> a(n);
    std::vector<double> cur, next, vals;
    for (int i = 0; i < n; ++i) {
        cur.assign(1, 1.0);
        const auto x = data.x_row(i);
        for (int c = 0; c < k; ++c) {
            const FTCore& core = ft.core(c);
            vals.resize(static_cast<std::size_t>(core.rows()) * core.cols());
            core.eval(x[c], vals);
            next.assign(core.cols(), 0.0);
            for (int r = 0; r < core.rows(); ++r)
                for (int j = 0; j < core.cols(); ++j)
                    next[j] += cur[r] * vals[static_cast<std::size_t>(r) * core.cols() + j];
            std::swap(cur, next);
        }
        a[i] = cur;
    }
    return a;
}

// Right products F_{k+1}(x_{k+1})...F_d(x_d) per sample (column vectors).
std::vector<std::vector<double>> right_products(const FunctionTrain& ft,
                                                const Dataset& data, int k) {
    const int n = data.n();
    const int d = ft.dim();
    std::vector<std::vector<double>> c(n);
    std::vector<double> cur, next, vals;
    for (int i = 0; i < n; ++i) {
        cur.assign(1, 1.0);
        const auto x = data.x_row(i);
        for (int cidx = d - 1; cidx > k; --cidx) {
            const FTCore& core = ft.core(cidx);
            vals.resize(static_cast<std::size_t>(core.rows()) * core.cols());
            core.eval(x[cidx], vals);
            next.assign(core.rows(), 0.0);
            for (int r = 0; r < core.rows(); ++r) {
                double s = 0.0;
                for (int j = 0; j < core.cols(); ++j)
                    s += vals[static_cast<std::size_t>(r) * core.cols() + j] * cur[j];
                next[r] = s;
            }
            std::swap(cur, next);
        }
        c[i] = cur;
    }
    return c;
}

double training_objective(const FunctionTrain& ft, const Dataset& data,
                          double lambda) {
    RegressionObjective obj(ft, data, lambda);
    const std::vector<double> theta = ft.pack_params();
    return obj.full(theta, {});
}

} // namespace

double als_update_core(FunctionTrain& ft, const Dataset& data, double lambda,
                       int k, const OptimOptions& opts) {
    if (k < 0 || k >= ft.dim()) throw InputError("core index out of range");
    const FTCore& core = ft.core(k);
    const int n = data.n();

    bool any_kernel = false;
    int free_params = 0;
    for (int i = 0; i < core.rows(); ++i)
        for (int j = 0; j < core.cols(); ++j) {
            const auto& u = core.at(i, j);
            free_params += u.num_params();
            if (u.kind() == UnivariateParam::Kind::MovingKernel) any_kernel = true;
        }
    if (free_params == 0) return training_objective(ft, data, lambda);

    const auto a = left_products(ft, data, k);
    const auto c = right_products(ft, data, k);

    if (!any_kernel) {
        // Quadratic subproblem: solve the normal equations of the linearized
        // model, with the core's regularizer Gram block and a ridge jitter.
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(free_params, free_params);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(free_params);
        Eigen::VectorXd w(free_params);
        std::vector<double> phi;
        for (int i = 0; i < n; ++i) {
            const double xk = data.x_row(i)[k];
            double offset = 0.0;
            int pos = 0;
            for (int r = 0; r < core.rows(); ++r)
                for (int j = 0; j < core.cols(); ++j) {
                    const UnivariateParam& u = core.at(r, j);
                    const double ac = a[i][r] * c[i][j];
                    if (u.is_const()) {
                        if (u.kind() == UnivariateParam::Kind::ConstOne) offset += ac;
                        continue;
                    }
                    const int p = u.num_params();
                    phi.resize(p);
                    u.basis().eval_all(xk, phi);
                    for (int l = 0; l < p; ++l) w[pos + l] = ac * phi[l];
                    pos += p;
                }
            const double target = data.target(i) - offset;
            A.selfadjointView<Eigen::Lower>().rankUpdate(w, 1.0);
            b += target * w;
        }
        A = A.selfadjointView<Eigen::Lower>();
        const double inv_n = 1.0 / static_cast<double>(n);
        A *= inv_n;
        b *= inv_n;

        if (lambda > 0.0) {
            int pos = 0;
            for (int r = 0; r < core.rows(); ++r)
                for (int j = 0; j < core.cols(); ++j) {
                    const UnivariateParam& u = core.at(r, j);
                    if (u.is_const()) continue;
                    const int p = u.num_params();
                    if (u.basis().kind() == BasisSpec::Kind::Legendre) {
                        for (int l = 0; l < p; ++l) A(pos + l, pos + l) += lambda;
                    } else {
                        A.block(pos, pos, p, p) += lambda * u.basis().gram();
                    }
                    pos += p;
                }
        }
        for (int i = 0; i < free_params; ++i) A(i, i) += opts.als.ridge_jitter;

        Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
        if (ldlt.info() != Eigen::Success)
            throw NumericalError("ALS normal equations are singular");
        const Eigen::VectorXd theta_k = ldlt.solve(b);
        if (!theta_k.allFinite())
            throw NumericalError("ALS normal equations produced non-finite solution");

        int pos = 0;
        FTCore& mut = ft.core(k);
        for (int r = 0; r < mut.rows(); ++r)
            for (int j = 0; j < mut.cols(); ++j) {
                UnivariateParam& u = mut.at(r, j);
                const int p = u.num_params();
                if (p == 0) continue;
                u.set_params(std::span<const double>(theta_k.data() + pos,
                                                     static_cast<std::size_t>(p)));
                pos += p;
            }
        return training_objective(ft, data, lambda);
    }

    // Nonlinear core: inner quasi-Newton over this core's slots.
    std::vector<double> theta0;
    for (int r = 0; r < core.rows(); ++r)
        for (int j = 0; j < core.cols(); ++j) {
            const auto p = core.at(r, j).params();
            theta0.insert(theta0.end(), p.begin(), p.end());
        }

    const Interval dom = ft.domains()[k];
    auto objective = [&](std::span<const double> th,
                         std::span<double> grad) -> double {
        FTCore& mut = ft.core(k);
        std::size_t off = 0;
        for (int r = 0; r < mut.rows(); ++r)
            for (int j = 0; j < mut.cols(); ++j) {
                UnivariateParam& u = mut.at(r, j);
                const std::size_t p = static_cast<std::size_t>(u.num_params());
                if (p) u.set_params(th.subspan(off, p));
                off += p;
            }
        const bool want_grad = !grad.empty();
        if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
        std::vector<double> df(th.size());
        std::vector<double> gq;
        double sum_sq = 0.0;
        for (int i = 0; i < n; ++i) {
            const double xk = data.x_row(i)[k];
            double value = 0.0;
            int pos = 0;
            for (int r = 0; r < mut.rows(); ++r)
                for (int j = 0; j < mut.cols(); ++j) {
                    const UnivariateParam& u = mut.at(r, j);
                    const double ac = a[i][r] * c[i][j];
                    const int p = u.num_params();
                    if (p == 0) {
                        if (u.kind() == UnivariateParam::Kind::ConstOne) value += ac;
                        continue;
                    }
                    gq.resize(p);
                    value += ac * u.eval_grad(xk, gq);
                    if (want_grad)
                        for (int l = 0; l < p; ++l) df[pos + l] = ac * gq[l];
                    pos += p;
                }
            const double res = data.target(i) - value;
            sum_sq += res * res;
            if (want_grad)
                for (int l = 0; l < pos; ++l) grad[l] += res * df[l];
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        if (want_grad)
            for (auto& g : grad) g *= -2.0 * inv_n;
        double omega = 0.0;
        if (lambda > 0.0) {
            // Regularizer restricted to this core, by quadrature.
            const QuadratureRule rule = gauss_legendre_on(200, dom);
            const double inv_width = 1.0 / dom.width();
            std::size_t pos = 0;
            for (int r = 0; r < mut.rows(); ++r)
                for (int j = 0; j < mut.cols(); ++j) {
                    const UnivariateParam& u = mut.at(r, j);
                    const int p = u.num_params();
                    if (p == 0) continue;
                    gq.resize(p);
                    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                        const double w = rule.weights[q] * inv_width;
                        const double v = u.eval_grad(rule.nodes[q], gq);
                        omega += w * v * v;
                        if (want_grad)
                            for (int l = 0; l < p; ++l)
                                grad[pos + l] += 2.0 * lambda * w * v * gq[l];
                    }
                    pos += p;
                }
        }
        return sum_sq * inv_n + lambda * omega;
    };

    OptimOptions inner = opts;
    inner.max_iters = opts.als.nonlinear_core_iters;
    FitResult inner_fit = lbfgs_minimize(objective, theta0, inner);
    // Leave the core at the best parameters found.
    objective(inner_fit.params, {});
    return training_objective(ft, data, lambda);
}

AlsFitResult fit_als(FunctionTrain ft0, const Dataset& data, double lambda,
                     const OptimOptions& opts) {
    opts.validate();
    const int d = ft0.dim();

    // Fixed Monte Carlo points for the sweep-to-sweep convergence norm.
    Rng rng(opts.als.mc_seed);
    const int mc = opts.als.mc_points;
    std::vector<double> mc_points(static_cast<std::size_t>(mc) * d);
    for (int i = 0; i < mc; ++i)
        for (int k = 0; k < d; ++k) {
            const Interval& dom = ft0.domains()[k];
            mc_points[static_cast<std::size_t>(i) * d + k] =
                rng.uniform(dom.lo, dom.hi);
        }
    auto eval_mc = [&](const FunctionTrain& ft, std::vector<double>& out) {
        out.resize(mc);
        EvalWorkspace ws;
        for (int i = 0; i < mc; ++i)
            out[i] = ft.eval(std::span<const double>(
                                 mc_points.data() + static_cast<std::size_t>(i) * d,
                                 static_cast<std::size_t>(d)),
                             ws);
    };

    AlsFitResult result{std::move(ft0), {}};
    std::vector<double> prev_vals, cur_vals;
    eval_mc(result.model, prev_vals);

    double objective = training_objective(result.model, data, lambda);
    result.report.trace.push_back(objective);

    int sweep = 0;
    for (; sweep < opts.als.max_sweeps; ++sweep) {
        try {
            for (int k = 0; k < d; ++k)
                objective = als_update_core(result.model, data, lambda, k, opts);
        } catch (const NumericalError& e) {
            result.report.note = e.what();
            result.report.converged = false;
            break;
        }
        result.report.trace.push_back(objective);
        eval_mc(result.model, cur_vals);
        double diff_sq = 0.0;
        for (int i = 0; i < mc; ++i) {
            const double dlt = cur_vals[i] - prev_vals[i];
            diff_sq += dlt * dlt;
        }
        const double change = std::sqrt(diff_sq / static_cast<double>(mc));
        std::swap(prev_vals, cur_vals);
        if (change <= opts.als.sweep_tol) {
            result.report.converged = true;
            ++sweep;
            break;
        }
    }
    result.report.final_objective = objective;
    result.report.iterations = sweep;
    return result;
}

// ---------------------------------------------------------------------------
// Initialization

std::vector<double> initial_params(const FunctionTrain& model_template,
                                   const Dataset& data, std::uint64_t seed) {
    Rng rng(seed);
    const double y_mean = data.target_mean();
    std::vector<double> theta;
    theta.reserve(model_template.num_params());

    for (int k = 0; k < model_template.dim(); ++k) {
        const FTCore& core = model_template.core(k);
        const double r = static_cast<double>(std::max(core.rows(), core.cols()));
        for (int i = 0; i < core.rows(); ++i)
            for (int j = 0; j < core.cols(); ++j) {
                const UnivariateParam& u = core.at(i, j);
                const int p = u.num_params();
                if (p == 0) continue;
                const double scale = 1.0 / std::sqrt(r * p);
                if (u.kind() == UnivariateParam::Kind::MovingKernel) {
                    const int m = p / 2;
                    for (int l = 0; l < m; ++l) theta.push_back(scale * rng.normal());
                    // Centers at uniform quantiles between the 10th and 90th.
                    for (int l = 0; l < m; ++l) {
                        const double q =
                            m == 1 ? 0.5
                                   : 0.1 + 0.8 * static_cast<double>(l) /
                                               static_cast<double>(m - 1);
                        theta.push_back(data.quantile(k, q));
                    }
                } else {
                    for (int l = 0; l < p; ++l) theta.push_back(scale * rng.normal());
                    if (k == 0 && i == 0 && j == 0 &&
                        u.kind() == UnivariateParam::Kind::Linear &&
                        u.basis().kind() == BasisSpec::Kind::Legendre) {
                        // Constant slot carries the target mean.
                        theta[theta.size() - p] = y_mean;
                    }
                }
            }
    }
    return theta;
}

} // namespace ftreg
