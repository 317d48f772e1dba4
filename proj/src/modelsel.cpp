#include "ftreg/modelsel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "ftreg/parallel.hpp"
#include "ftreg/rng.hpp"

namespace ftreg {

namespace {

std::vector<int> fold_assignment(int n, int folds, std::uint64_t seed) {
    if (folds < 2) throw ConfigError("folds must be >= 2");
    if (folds > n) throw InputError("more folds than samples");
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    rng.shuffle(perm);
    std::vector<int> fold_of(n);
    for (int i = 0; i < n; ++i) {
        // Contiguous blocks of the shuffled order.
        const long f = static_cast<long>(i) * folds / n;
        fold_of[perm[i]] = static_cast<int>(f);
    }
    return fold_of;
}

struct FoldFit {
    FunctionTrain model;
    double holdout_mse = 0.0;
};

FoldFit fit_and_score(const ModelSpec& spec, double lambda,
                      const Dataset& train, const Dataset& test,
                      std::uint64_t seed, const FitConfig& fit) {
    FunctionTrain templ = build_model(spec, train);
    const std::vector<double> theta0 = initial_params(templ, train, seed);

    FunctionTrain fitted = templ;
    switch (fit.optimizer) {
    case OptimizerKind::Aao: {
        RegressionObjective obj(templ, train, lambda);
        FitResult res = fit_aao(obj, theta0, fit.opts);
        fitted.set_params(res.params);
        break;
    }
    case OptimizerKind::Sgd: {
        RegressionObjective obj(templ, train, lambda);
        FitResult res = fit_sgd(obj, theta0, fit.opts);
        fitted.set_params(res.params);
        break;
    }
    case OptimizerKind::Als: {
        templ.set_params(theta0);
        AlsFitResult res = fit_als(std::move(templ), train, lambda, fit.opts);
        fitted = std::move(res.model);
        break;
    }
    }

    EvalWorkspace ws;
    double mse = 0.0;
    for (int i = 0; i < test.n(); ++i) {
        const double r = test.target(i) - fitted.eval(test.x_row(i), ws);
        mse += r * r;
    }
    mse /= static_cast<double>(test.n());
    return FoldFit{std::move(fitted), mse};
}

} // namespace

double kfold_cv(const ModelSpec& spec, double lambda, const Dataset& data,
                int folds, std::uint64_t seed, const FitConfig& fit,
                std::vector<int>* fold_of_out) {
    const int n = data.n();
    const std::vector<int> fold_of = fold_assignment(n, folds, seed);
    for (int f = 0; f < folds; ++f)
        if (std::count(fold_of.begin(), fold_of.end(), f) == 0)
            throw InputError("empty cross-validation fold");
    if (fold_of_out) *fold_of_out = fold_of;

    std::vector<double> fold_mse(folds, 0.0);
    parallel_for(static_cast<std::size_t>(folds), [&](std::size_t f) {
        std::vector<int> train_rows, test_rows;
        for (int i = 0; i < n; ++i) {
            if (fold_of[i] == static_cast<int>(f))
                test_rows.push_back(i);
            else
                train_rows.push_back(i);
        }
        const Dataset train = data.subset(train_rows);
        const Dataset test = data.subset(test_rows);
        fold_mse[f] = fit_and_score(spec, lambda, train, test,
                                    mix_seed(seed, f + 1), fit)
                          .holdout_mse;
    });
    double mean = 0.0;
    for (double m : fold_mse) mean += m;
    return mean / static_cast<double>(folds);
}

CVResult grid_search(const Hypergrid& grid, const Dataset& data,
                     const FitConfig& fit) {
    if (grid.ranks.empty() || grid.num_funcs.empty() || grid.widths.empty() ||
        grid.lambdas.empty())
        throw InputError("hyper-parameter grid must not be empty");

    auto sorted = []<typename T>(std::vector<T> v) {
        std::sort(v.begin(), v.end());
        return v;
    };
    const auto ranks = sorted(grid.ranks);
    const auto nfuncs = sorted(grid.num_funcs);
    const auto widths = sorted(grid.widths);
    const auto lambdas = sorted(grid.lambdas);

    CVResult result;
    for (int r : ranks)
        for (int p : nfuncs)
            for (double w : widths)
                for (double l : lambdas)
                    result.rows.push_back(CVRow{r, p, w, l, 0.0});

    parallel_for(result.rows.size(), [&](std::size_t idx) {
        CVRow& row = result.rows[idx];
        ModelSpec spec;
        spec.basis = grid.basis;
        spec.ranks = uniform_ranks(data.dim(), row.rank);
        spec.num_funcs = row.num_funcs;
        spec.width_mult = row.width;
        row.mean_mse =
            kfold_cv(spec, row.lambda, data, grid.folds, grid.seed, fit);
    });

    // Rows are in ascending (rank, num_funcs, width, lambda) order, so strict
    // comparison breaks ties toward the smaller model.
    result.winner = 0;
    for (std::size_t i = 1; i < result.rows.size(); ++i)
        if (result.rows[i].mean_mse < result.rows[result.winner].mean_mse)
            result.winner = i;

    fold_assignment(data.n(), grid.folds, grid.seed)
        .swap(result.fold_of);
    return result;
}

AdaptResult rank_adapt(const Dataset& data, const AdaptOptions& adapt,
                       const FitConfig& fit) {
    if (!(adapt.delta > 0.0)) throw ConfigError("rounding tolerance must be > 0");
    if (adapt.r_max < 1) throw ConfigError("r_max must be >= 1");
    const int d = data.dim();

    ModelSpec base;
    base.basis = adapt.basis;
    base.num_funcs = adapt.num_funcs;
    base.width_mult = adapt.width_mult;

    auto cv = [&](const RankVector& ranks) {
        ModelSpec spec = base;
        spec.ranks = ranks;
        return kfold_cv(spec, adapt.lambda, data, adapt.folds, adapt.seed, fit);
    };
    auto full_fit = [&](const RankVector& ranks) {
        ModelSpec spec = base;
        spec.ranks = ranks;
        FunctionTrain templ = build_model(spec, data);
        const std::vector<double> theta0 =
            initial_params(templ, data, mix_seed(adapt.seed, 0x5f17));
        if (fit.optimizer == OptimizerKind::Als) {
            templ.set_params(theta0);
            return fit_als(std::move(templ), data, adapt.lambda, fit.opts).model;
        }
        RegressionObjective obj(templ, data, adapt.lambda);
        const FitResult res = fit.optimizer == OptimizerKind::Sgd
                                  ? fit_sgd(obj, theta0, fit.opts)
                                  : fit_aao(obj, theta0, fit.opts);
        templ.set_params(res.params);
        return templ;
    };

    AdaptResult result{FunctionTrain({FTCore(1, 1)}, {Interval{-1, 1}}), {}};
    RankVector ranks = uniform_ranks(d, 1);
    double eps = cv(ranks);
    result.trace.push_back(AdaptStep{ranks, eps, "init", {}, false});

    std::optional<FunctionTrain> last_fit;
    RankVector last_fit_ranks;
    RankVector final_ranks = ranks;

    while (true) {
        RankVector grown = ranks;
        bool capped = false;
        for (std::size_t k = 1; k + 1 < grown.size(); ++k) {
            grown[k] += 1;
            if (grown[k] > adapt.r_max) capped = true;
        }
        if (capped) {
            result.trace.push_back(AdaptStep{ranks, eps, "rmax-stop", {}, false});
            final_ranks = ranks;
            break;
        }
        const double eps_hat = cv(grown);
        if (eps_hat > eps) {
            result.trace.push_back(AdaptStep{grown, eps_hat, "cv-revert", {}, false});
            final_ranks = ranks;
            break;
        }
        eps = eps_hat;
        ranks = grown;

        FunctionTrain fitted = full_fit(ranks);
        last_fit = fitted;
        last_fit_ranks = ranks;

        bool rounding_skipped = false;
        RankVector rounded;
        try {
            rounded = ft_rounding_rank(fitted, adapt.delta);
        } catch (const UnsupportedError&) {
            rounding_skipped = true;
        }
        if (rounding_skipped) {
            result.trace.push_back(AdaptStep{ranks, eps_hat, "grow", {}, true});
            continue;
        }
        bool all_lower = true;
        for (std::size_t k = 1; k + 1 < ranks.size(); ++k)
            if (rounded[k] >= ranks[k]) all_lower = false;
        if (all_lower) {
            result.trace.push_back(
                AdaptStep{ranks, eps_hat, "round-stop", rounded, false});
            final_ranks = ranks;
            break;
        }
        result.trace.push_back(
            AdaptStep{ranks, eps_hat, "adopt-rounded", rounded, false});
        ranks = rounded;
    }

    if (last_fit && last_fit_ranks == final_ranks)
        result.model = std::move(*last_fit);
    else
        result.model = full_fit(final_ranks);
    return result;
}

} // namespace ftreg
