#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "stopout/csv.hpp"
#include "stopout/featurize.hpp"

namespace stopout {

struct PredictionSpec {
    int lead = 1;
    int lag = 1;
    Cohort cohort = Cohort::passive_collaborator;

    int target_week() const { return lead + lag; }
};

// All (lead, lag) pairs with lead, lag >= 1 and lead + lag <= horizon,
// ordered lag ascending then lead ascending. Horizon 14 gives the 91 pairs.
inline std::vector<std::pair<int, int>> enumerate_problems(int horizon) {
    std::vector<std::pair<int, int>> out;
    for (int lag = 1; lag < horizon; ++lag)
        for (int lead = 1; lead + lag <= horizon; ++lead) out.emplace_back(lead, lag);
    return out;
}

struct ColumnScaler {
    double mean = 0.0;
    double stddev = 0.0;  // population; 0 marks a constant column
};

struct PredictionDataset {
    PredictionSpec spec;
    std::vector<std::string> covariate_names;  // "xK@wW", week-major
    Eigen::MatrixXd X;                         // z-scored
    Eigen::VectorXd y;                         // 0/1 labels
    std::vector<std::string> learner_ids;
    std::vector<ColumnScaler> scaler;

    bool empty() const { return learner_ids.empty(); }
    bool single_class() const {
        if (y.size() == 0) return true;
        double first = y[0];
        for (Eigen::Index i = 1; i < y.size(); ++i)
            if (y[i] != first) return false;
        return true;
    }
};

inline std::string covariate_name(int column) {
    return feature_names()[column % num_features] + "@w" +
           std::to_string(column / num_features + 1);
}

// Z-score columns in place with the dataset's own mean and population
// standard deviation. Constant columns become all-zero.
inline std::vector<ColumnScaler> zscore_columns(Eigen::MatrixXd& X) {
    std::vector<ColumnScaler> scalers(X.cols());
    const double n = static_cast<double>(X.rows());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        double mean = X.col(j).sum() / n;
        double var = (X.col(j).array() - mean).square().sum() / n;
        double sd = std::sqrt(var);
        if (sd < 1e-12) {
            X.col(j).setZero();
            scalers[j] = {mean, 0.0};
        } else {
            X.col(j) = (X.col(j).array() - mean) / sd;
            scalers[j] = {mean, sd};
        }
    }
    return scalers;
}

// A learner is included iff it belongs to the spec's cohort and was still
// active (x1 = 1) through every lag week. Covariates are the 27 features for
// weeks 1..lag, week-major; the label is x1 at the target week.
inline PredictionDataset build_dataset(const PredictionSpec& spec, const FeatureMatrix& features,
                                       const CohortMap& cohorts) {
    if (features.num_weeks < spec.target_week())
        throw DataError("feature matrix covers " + std::to_string(features.num_weeks) +
                        " weeks, target week is " + std::to_string(spec.target_week()));
    PredictionDataset ds;
    ds.spec = spec;
    const int p = spec.lag * num_features;
    for (int j = 0; j < p; ++j) ds.covariate_names.push_back(covariate_name(j));

    std::vector<std::size_t> included;
    for (std::size_t li = 0; li < features.learners.size(); ++li) {
        auto it = cohorts.find(features.learners[li]);
        if (it == cohorts.end() || it->second != spec.cohort) continue;
        bool active = true;
        for (int w = 1; w <= spec.lag && active; ++w)
            if (features.x1[features.row(li, w)] != 1.0) active = false;
        if (active) included.push_back(li);
    }
    if (included.empty()) return ds;

    ds.X.resize(static_cast<Eigen::Index>(included.size()), p);
    ds.y.resize(static_cast<Eigen::Index>(included.size()));
    for (std::size_t i = 0; i < included.size(); ++i) {
        std::size_t li = included[i];
        ds.learner_ids.push_back(features.learners[li]);
        for (int j = 0; j < p; ++j) {
            int week = j / num_features + 1;
            int feat = j % num_features;
            ds.X(static_cast<Eigen::Index>(i), j) = features.value(li, week, feat);
        }
        ds.y[static_cast<Eigen::Index>(i)] = features.x1[features.row(li, spec.target_week())];
    }
    ds.scaler = zscore_columns(ds.X);
    return ds;
}

inline void write_dataset_csv(const PredictionDataset& ds, const std::filesystem::path& path) {
    std::string out;
    for (const auto& n : ds.covariate_names) out += n + ",";
    out += "label\n";
    for (Eigen::Index i = 0; i < ds.X.rows(); ++i) {
        for (Eigen::Index j = 0; j < ds.X.cols(); ++j) out += format_exact(ds.X(i, j)) + ",";
        out += format_sig9(ds.y[i]) + "\n";
    }
    write_file_atomic(path, out);
}

// Reads a dumped dataset. The spec and learner ids are not stored in the
// file; only names, X and y are recovered.
inline PredictionDataset read_dataset_csv(const std::filesystem::path& path) {
    auto lines = read_lines(path);
    if (lines.empty()) throw DataError("empty dataset file " + path.string());
    auto header = split_csv_line(lines[0]);
    if (header.empty() || header.back() != "label")
        throw DataError("dataset csv: last column must be label");
    PredictionDataset ds;
    ds.covariate_names.assign(header.begin(), header.end() - 1);
    const std::size_t p = ds.covariate_names.size();

    std::vector<std::vector<double>> rows;
    std::vector<double> labels;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto f = split_csv_line(lines[i]);
        if (f.size() != p + 1)
            throw DataError("dataset csv: bad row " + std::to_string(i + 1));
        std::vector<double> row(p);
        for (std::size_t j = 0; j < p; ++j) row[j] = std::strtod(f[j].c_str(), nullptr);
        rows.push_back(std::move(row));
        labels.push_back(std::strtod(f[p].c_str(), nullptr));
    }
    ds.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
    ds.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < p; ++j)
            ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        ds.y[static_cast<Eigen::Index>(i)] = labels[i];
        ds.learner_ids.push_back("row" + std::to_string(i));
    }
    return ds;
}

}  // namespace stopout
