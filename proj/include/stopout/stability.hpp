#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stopout/csv.hpp"
#include "stopout/dataset.hpp"
#include "stopout/logreg.hpp"
#include "stopout/rng.hpp"

namespace stopout {

struct RLRConfig {
    int n_trials = 200;
    double subsample_fraction = 0.75;
    double lambda = 0.0;   // <= 0 selects 0.1 * lambda_max of the dataset
    double alpha = 0.5;    // per-covariate penalties drawn from U[lambda, lambda/alpha]
    double threshold = 0.25;
    std::uint64_t seed = 0;
    double tol = 1e-7;
    int max_iter = 20000;
};

struct SelectionProfile {
    PredictionSpec spec;
    int n_trials = 0;
    std::vector<double> probs;  // per covariate, multiples of 1/n_trials
    int failed_trials = 0;      // subsample stayed single-class after redraws
    double lambda_used = 0.0;
};

// Randomized logistic regression: n_trials times, subsample 75% of the rows
// without replacement, draw an independent penalty per covariate from
// U[lambda, lambda/alpha], fit, and mark covariates whose |w_j| meets the
// threshold. Trial streams are keyed by (seed, trial), so results do not
// depend on execution order.
inline SelectionProfile rlr_run(const PredictionDataset& dataset, const RLRConfig& cfg) {
    if (dataset.empty()) throw DataError("rlr_run: empty dataset");
    if (dataset.single_class()) throw DataError("rlr_run: dataset has a single class");
    if (cfg.alpha <= 0.0 || cfg.alpha > 1.0) throw DataError("rlr_run: alpha must be in (0,1]");

    const std::size_t n = dataset.learner_ids.size();
    const Eigen::Index p = dataset.X.cols();
    const std::size_t m = static_cast<std::size_t>(cfg.subsample_fraction * static_cast<double>(n));

    double lambda = cfg.lambda > 0.0 ? cfg.lambda
                                     : 0.1 * logreg::lambda_max(dataset.X, dataset.y);

    SelectionProfile profile;
    profile.spec = dataset.spec;
    profile.n_trials = cfg.n_trials;
    profile.lambda_used = lambda;
    std::vector<int> counts(p, 0);

    FitOptions fit_opts;
    fit_opts.tol = cfg.tol;
    fit_opts.max_iter = cfg.max_iter;

    for (int trial = 0; trial < cfg.n_trials; ++trial) {
        Rng rng = Rng::stream(cfg.seed, {static_cast<std::uint64_t>(trial)});

        std::vector<std::size_t> idx;
        bool two_classes = false;
        for (int attempt = 0; attempt < 10 && !two_classes; ++attempt) {
            idx = rng.sample_without_replacement(n, m);
            bool pos = false, neg = false;
            for (std::size_t i : idx) (dataset.y[static_cast<Eigen::Index>(i)] > 0.5 ? pos : neg) = true;
            two_classes = pos && neg;
        }
        if (!two_classes) {
            ++profile.failed_trials;  // counts as all-zero selection
            continue;
        }

        Eigen::VectorXd penalties(p);
        for (Eigen::Index j = 0; j < p; ++j) penalties[j] = rng.uniform(lambda, lambda / cfg.alpha);

        Eigen::MatrixXd Xs(static_cast<Eigen::Index>(idx.size()), p);
        Eigen::VectorXd ys(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            Xs.row(static_cast<Eigen::Index>(i)) = dataset.X.row(static_cast<Eigen::Index>(idx[i]));
            ys[static_cast<Eigen::Index>(i)] = dataset.y[static_cast<Eigen::Index>(idx[i])];
        }

        LogRegModel model = fit_weighted_l1_logreg(Xs, ys, penalties, fit_opts);
        for (Eigen::Index j = 0; j < p; ++j)
            if (std::abs(model.weights[j]) >= cfg.threshold) ++counts[j];
    }

    profile.probs.resize(p);
    for (Eigen::Index j = 0; j < p; ++j)
        profile.probs[j] = static_cast<double>(counts[j]) / static_cast<double>(cfg.n_trials);
    return profile;
}

// Week-invariant importance for one cohort: per experiment, lag-average each
// feature's selection probabilities, normalize to relative weights, then
// average the relative weights over all experiments and renormalize.
inline std::vector<double> week_invariant_importance(const std::vector<SelectionProfile>& profiles) {
    std::vector<double> acc(num_features, 0.0);
    int experiments = 0;
    for (const auto& pr : profiles) {
        const int lag = pr.spec.lag;
        if (pr.probs.size() != static_cast<std::size_t>(lag) * num_features)
            throw DataError("week_invariant_importance: profile length does not match lag");
        std::vector<double> imp(num_features, 0.0);
        double total = 0.0;
        for (int f = 0; f < num_features; ++f) {
            for (int w = 1; w <= lag; ++w) imp[f] += pr.probs[f + num_features * (w - 1)];
            imp[f] /= static_cast<double>(lag);
            total += imp[f];
        }
        for (int f = 0; f < num_features; ++f)
            acc[f] += total > 0.0 ? imp[f] / total : 1.0 / num_features;
        ++experiments;
    }
    if (experiments == 0) return std::vector<double>(num_features, 1.0 / num_features);
    double sum = 0.0;
    for (double& v : acc) {
        v /= static_cast<double>(experiments);
        sum += v;
    }
    for (double& v : acc) v /= sum;
    return acc;
}

// ---- CSV interfaces ----

inline std::string selection_filename(const PredictionSpec& spec) {
    return "selection_lead" + std::to_string(spec.lead) + "_lag" + std::to_string(spec.lag) +
           "_" + to_string(spec.cohort) + ".csv";
}

inline void write_selection_csv(const SelectionProfile& profile,
                                const std::vector<std::string>& covariate_names,
                                const std::filesystem::path& path) {
    if (covariate_names.size() != profile.probs.size())
        throw DataError("write_selection_csv: name/probability length mismatch");
    std::string out = "covariate,probability\n";
    for (std::size_t j = 0; j < profile.probs.size(); ++j)
        out += covariate_names[j] + "," + format_sig9(profile.probs[j]) + "\n";
    write_file_atomic(path, out);
}

inline void write_importance_csv(const std::vector<double>& weights,
                                 const std::filesystem::path& path) {
    // rank: weight descending, ties broken by feature id ascending
    std::vector<int> order(num_features);
    for (int i = 0; i < num_features; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return weights[a] > weights[b]; });
    std::vector<int> rank(num_features, 0);
    for (int r = 0; r < num_features; ++r) rank[order[r]] = r + 1;

    std::string out = "feature,weight,rank\n";
    for (int f = 0; f < num_features; ++f)
        out += feature_names()[f] + "," + format_sig9(weights[f]) + "," + std::to_string(rank[f]) +
               "\n";
    write_file_atomic(path, out);
}

inline std::vector<double> read_importance_csv(const std::filesystem::path& path) {
    auto lines = read_lines(path);
    std::vector<double> weights(num_features, 0.0);
    std::vector<bool> seen(num_features, false);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto f = split_csv_line(lines[i]);
        if (f.size() != 3) throw DataError("importance csv: bad row in " + path.string());
        int idx = feature_index(f[0]);
        if (idx < 0) throw DataError("importance csv: unknown feature " + f[0] + " in " + path.string());
        weights[idx] = std::strtod(f[1].c_str(), nullptr);
        seen[idx] = true;
    }
    for (int f = 0; f < num_features; ++f)
        if (!seen[f]) throw DataError("importance csv: missing feature " + feature_names()[f] +
                                      " in " + path.string());
    return weights;
}

}  // namespace stopout
