#include "ftreg/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "ftreg/parallel.hpp"
#include "ftreg/rng.hpp"

namespace ftreg {

namespace {

void check_bounds(const BenchFunction& fn, std::span<const double> x) {
    if (static_cast<int>(x.size()) != fn.dim)
        throw InputError(fn.name + " expects " + std::to_string(fn.dim) + " inputs");
    for (int k = 0; k < fn.dim; ++k)
        if (!std::isfinite(x[k]) || !fn.bounds[k].contains(x[k]))
            throw InputError(fn.name + " input " + std::to_string(k) +
                             " outside its bounds");
}

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

} // namespace

double otl_circuit(std::span<const double> x) {
    check_bounds(bench_function("otl"), x);
    const double rb1 = x[0], rb2 = x[1], rf = x[2], rc1 = x[3], rc2 = x[4],
                 beta = x[5];
    const double vb1 = 12.0 * rb2 / (rb1 + rb2);
    const double bg = beta * (rc2 + 9.0);
    const double den = bg + rf;
    return (vb1 + 0.74) * bg / den + 11.35 * rf / den +
           0.74 * rf * bg / (den * rc1);
}

double wing_weight(std::span<const double> x) {
    check_bounds(bench_function("wingweight"), x);
    const double sw = x[0], wfw = x[1], a = x[2], lam_deg = x[3], q = x[4],
                 taper = x[5], tc = x[6], nz = x[7], wdg = x[8], wp = x[9];
    // The sweep angle is in degrees.
    const double cl = std::cos(lam_deg * kDegToRad);
    return 0.036 * std::pow(sw, 0.758) * std::pow(wfw, 0.0035) *
               std::pow(a / (cl * cl), 0.6) * std::pow(q, 0.006) *
               std::pow(taper, 0.04) * std::pow(100.0 * tc / cl, -0.3) *
               std::pow(nz * wdg, 0.49) +
           sw * wp;
}

double sine_of_sums(std::span<const double> x) {
    if (x.size() != 6) throw InputError("sinesum expects 6 inputs");
    double s = 0.0;
    for (double v : x) s += v;
    return std::sin(s);
}

const BenchFunction& bench_function(const std::string& name) {
    static const BenchFunction otl{
        "otl",
        6,
        {{50.0, 150.0}, {25.0, 70.0}, {0.5, 3.0}, {1.2, 2.5}, {0.25, 1.2}, {50.0, 300.0}},
        &otl_circuit};
    static const BenchFunction ww{"wingweight",
                                  10,
                                  {{150.0, 200.0},
                                   {220.0, 300.0},
                                   {6.0, 10.0},
                                   {-10.0, 10.0},
                                   {16.0, 45.0},
                                   {0.5, 1.0},
                                   {0.08, 0.18},
                                   {2.5, 6.0},
                                   {1700.0, 2500.0},
                                   {0.025, 0.08}},
                                  &wing_weight};
    static const BenchFunction sinesum{
        "sinesum",
        6,
        {{-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}},
        &sine_of_sums};
    if (name == "otl") return otl;
    if (name == "wingweight") return ww;
    if (name == "sinesum") return sinesum;
    throw ConfigError("unknown benchmark function '" + name +
                      "' (expected otl|wingweight|sinesum)");
}

std::vector<std::string> bench_function_names() {
    return {"otl", "wingweight", "sinesum"};
}

DataMatrix sample_uniform(std::span<const Interval> bounds, int n,
                          std::uint64_t seed) {
    if (n < 1) throw InputError("sample count must be >= 1");
    for (const auto& b : bounds) b.validate();
    const int d = static_cast<int>(bounds.size());
    DataMatrix X(n, d);
    Rng rng(seed);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < d; ++k)
            X(i, k) = rng.uniform(bounds[k].lo, bounds[k].hi);
    return X;
}

double relative_squared_error(std::span<const double> predictions,
                              std::span<const double> truth) {
    if (predictions.size() != truth.size() || truth.empty())
        throw InputError("prediction/truth length mismatch");
    double mean = 0.0;
    for (double t : truth) mean += t;
    mean /= static_cast<double>(truth.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double e = predictions[i] - truth[i];
        num += e * e;
        const double c = truth[i] - mean;
        den += c * c;
    }
    if (!(den > 0.0))
        throw NumericalError("truth values have zero variance; relative error undefined");
    return num / den;
}

double relative_squared_error(
    const std::function<double(std::span<const double>)>& model,
    const std::function<double(std::span<const double>)>& truth,
    std::span<const Interval> bounds, int n_val, std::uint64_t seed) {
    if (n_val < 1) throw InputError("validation count must be >= 1");
    const DataMatrix X = sample_uniform(bounds, n_val, seed);
    std::vector<double> pred(n_val), tv(n_val);
    const int d = static_cast<int>(bounds.size());
    for (int i = 0; i < n_val; ++i) {
        const std::span<const double> row(X.data() + static_cast<std::size_t>(i) * d,
                                          static_cast<std::size_t>(d));
        pred[i] = model(row);
        tv[i] = truth(row);
    }
    return relative_squared_error(pred, tv);
}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.size() == 1) return sorted[0];
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::string format_double(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

} // namespace

StudyResult run_study(const StudySpec& spec) {
    if (spec.realizations < 1) throw InputError("realizations must be >= 1");
    if (spec.n_validation < 1) throw InputError("validation size must be >= 1");
    if (spec.sample_sizes.empty()) throw InputError("no sample sizes given");
    if (spec.optimizers.empty()) throw InputError("no optimizers given");
    const BenchFunction& fn = bench_function(spec.function);

    // Shared validation set.
    const DataMatrix val_X = sample_uniform(fn.bounds, spec.n_validation,
                                            mix_seed(spec.seed, 0xa11da7a));
    std::vector<double> val_truth(spec.n_validation);
    for (int i = 0; i < spec.n_validation; ++i)
        val_truth[i] = fn.eval(std::span<const double>(
            val_X.data() + static_cast<std::size_t>(i) * fn.dim,
            static_cast<std::size_t>(fn.dim)));

    struct Cell {
        int n_idx;
        int realization;
        int opt_idx;
    };
    std::vector<Cell> cells;
    for (std::size_t o = 0; o < spec.optimizers.size(); ++o)
        for (std::size_t s = 0; s < spec.sample_sizes.size(); ++s)
            for (int rep = 0; rep < spec.realizations; ++rep)
                cells.push_back(Cell{static_cast<int>(s), rep, static_cast<int>(o)});

    StudyResult result;
    result.rows.resize(cells.size());

    parallel_for(cells.size(), [&](std::size_t idx) {
        const Cell& cell = cells[idx];
        const int n = spec.sample_sizes[cell.n_idx];
        const OptimizerKind opt = spec.optimizers[cell.opt_idx];

        // Training data depends on (n, realization) only, so optimizers are
        // compared on identical samples.
        const std::uint64_t data_seed =
            mix_seed(spec.seed, static_cast<std::uint64_t>(cell.n_idx) * 1000003 +
                                    cell.realization + 1);
        StudyRow row;
        row.function = fn.name;
        row.optimizer = optimizer_name(opt);
        row.num_funcs = spec.model.num_funcs;
        row.n = n;
        row.realization = cell.realization;

        const auto t0 = std::chrono::steady_clock::now();
        try {
            DataMatrix X = sample_uniform(fn.bounds, n, data_seed);
            Eigen::VectorXd y(n);
            for (int i = 0; i < n; ++i)
                y[i] = fn.eval(std::span<const double>(
                    X.data() + static_cast<std::size_t>(i) * fn.dim,
                    static_cast<std::size_t>(fn.dim)));
            const Dataset data =
                Dataset::from_arrays(std::move(X), std::move(y), fn.bounds);

            FunctionTrain fitted = [&] {
                if (spec.adaptive) {
                    AdaptOptions adapt;
                    adapt.delta = spec.delta;
                    adapt.folds = spec.adapt_folds;
                    adapt.r_max = spec.r_max;
                    adapt.seed = mix_seed(data_seed, 0xada);
                    adapt.basis = spec.model.basis;
                    adapt.num_funcs = spec.model.num_funcs;
                    adapt.width_mult = spec.model.width_mult;
                    adapt.lambda = spec.lambda;
                    FitConfig fit{opt, spec.opts};
                    return rank_adapt(data, adapt, fit).model;
                }
                ModelSpec ms = spec.model;
                if (ms.ranks.empty()) ms.ranks = uniform_ranks(fn.dim, 2);
                FunctionTrain templ = build_model(ms, data);
                const std::vector<double> theta0 =
                    initial_params(templ, data, mix_seed(data_seed, 0x717));
                if (opt == OptimizerKind::Als) {
                    templ.set_params(theta0);
                    return fit_als(std::move(templ), data, spec.lambda, spec.opts)
                        .model;
                }
                RegressionObjective obj(templ, data, spec.lambda);
                const FitResult res = opt == OptimizerKind::Sgd
                                          ? fit_sgd(obj, theta0, spec.opts)
                                          : fit_aao(obj, theta0, spec.opts);
                templ.set_params(res.params);
                return templ;
            }();

            int max_rank = 1;
            for (std::size_t k = 1; k + 1 < fitted.ranks().size(); ++k)
                max_rank = std::max(max_rank, fitted.ranks()[k]);
            row.rank = max_rank;

            EvalWorkspace ws;
            std::vector<double> pred(spec.n_validation);
            for (int i = 0; i < spec.n_validation; ++i)
                pred[i] = fitted.eval(
                    std::span<const double>(
                        val_X.data() + static_cast<std::size_t>(i) * fn.dim,
                        static_cast<std::size_t>(fn.dim)),
                    ws);
            row.error = relative_squared_error(pred, val_truth);
        } catch (const std::exception& e) {
            row.failed = true;
            row.error = std::nan("");
        }
        row.seconds = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        result.rows[idx] = std::move(row);
    });

    // Quantile summary per (optimizer, n) group, preserving cell order.
    for (std::size_t o = 0; o < spec.optimizers.size(); ++o)
        for (std::size_t s = 0; s < spec.sample_sizes.size(); ++s) {
            std::vector<double> errs;
            int rank = 0;
            for (const auto& row : result.rows) {
                if (row.optimizer != optimizer_name(spec.optimizers[o]) ||
                    row.n != spec.sample_sizes[s] || row.failed)
                    continue;
                errs.push_back(row.error);
                rank = std::max(rank, row.rank);
            }
            if (errs.empty()) continue;
            std::sort(errs.begin(), errs.end());
            StudySummaryRow sr;
            sr.function = fn.name;
            sr.optimizer = optimizer_name(spec.optimizers[o]);
            sr.rank = rank;
            sr.num_funcs = spec.model.num_funcs;
            sr.n = spec.sample_sizes[s];
            sr.q25 = quantile_sorted(errs, 0.25);
            sr.q50 = quantile_sorted(errs, 0.50);
            sr.q75 = quantile_sorted(errs, 0.75);
            sr.count = static_cast<int>(errs.size());
            result.summary.push_back(std::move(sr));
        }
    return result;
}

std::string study_rows_csv(std::span<const StudyRow> rows) {
    std::ostringstream out;
    out << "function,optimizer,rank,p,n,realization,rel_sq_error,seconds\n";
    for (const auto& r : rows) {
        out << r.function << ',' << r.optimizer << ',' << r.rank << ','
            << r.num_funcs << ',' << r.n << ',' << r.realization << ','
            << (r.failed ? "failed" : format_double(r.error)) << ','
            << format_double(r.seconds) << '\n';
    }
    return out.str();
}

std::string study_summary_csv(std::span<const StudySummaryRow> rows) {
    std::ostringstream out;
    out << "function,optimizer,rank,p,n,q25,q50,q75,count\n";
    for (const auto& r : rows) {
        out << r.function << ',' << r.optimizer << ',' << r.rank << ','
            << r.num_funcs << ',' << r.n << ',' << format_double(r.q25) << ','
            << format_double(r.q50) << ',' << format_double(r.q75) << ','
            << r.count << '\n';
    }
    return out.str();
}

} // namespace ftreg
