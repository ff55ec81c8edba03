#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "stopout/dataset.hpp"
#include "stopout/featurize.hpp"
#include "stopout/stability.hpp"

namespace stopout {

struct SweepOptions {
    int horizon = 0;  // 0 picks num_weeks - 1
    RLRConfig rlr;
    int jobs = 1;
    FeaturizeOptions featurize;
};

struct ExperimentResult {
    PredictionSpec spec;
    enum class Status { completed, skipped_empty, skipped_single_class } status =
        Status::skipped_empty;
    SelectionProfile profile;
};

struct SweepResult {
    int horizon = 0;
    int attempted = 0;
    int completed = 0;
    int skipped_empty = 0;
    int skipped_single_class = 0;
    std::vector<ExperimentResult> experiments;                 // enumeration order
    std::map<Cohort, std::vector<double>> importance;          // 27 weights per cohort
    std::map<Cohort, int> experiments_used;
};

// Runs featurize -> cohorts -> (per cohort x lead/lag) build_dataset ->
// rlr_run -> week-invariant importance, writing every report into out_dir.
// Experiments run in parallel up to `jobs`; per-experiment seeds are derived
// from (seed, cohort, lead, lag), so output does not depend on scheduling.
inline SweepResult run_sweep(const EventStore& store, const SweepOptions& opts,
                             const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    FeatureMatrix features = extract_all(store, opts.featurize);
    CohortMap cohorts = assign_cohorts(store);
    write_features_csv(features, out_dir / "features.csv");
    write_cohorts_csv(cohorts, out_dir / "cohorts.csv");

    SweepResult result;
    result.horizon = opts.horizon > 0 ? opts.horizon : store.calendar.num_weeks - 1;
    if (result.horizon >= store.calendar.num_weeks)
        throw DataError("sweep: horizon must be below num_weeks");

    auto pairs = enumerate_problems(result.horizon);
    for (Cohort c : all_cohorts)
        for (auto [lead, lag] : pairs) {
            ExperimentResult er;
            er.spec = PredictionSpec{lead, lag, c};
            result.experiments.push_back(er);
        }
    result.attempted = static_cast<int>(result.experiments.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= result.experiments.size()) return;
            ExperimentResult& er = result.experiments[i];
            PredictionDataset ds = build_dataset(er.spec, features, cohorts);
            if (ds.empty()) {
                er.status = ExperimentResult::Status::skipped_empty;
                continue;
            }
            if (ds.single_class()) {
                er.status = ExperimentResult::Status::skipped_single_class;
                continue;
            }
            RLRConfig cfg = opts.rlr;
            cfg.seed = Rng::stream(opts.rlr.seed,
                                   {2, static_cast<std::uint64_t>(er.spec.cohort),
                                    static_cast<std::uint64_t>(er.spec.lead),
                                    static_cast<std::uint64_t>(er.spec.lag)})
                           .next_u64();
            er.profile = rlr_run(ds, cfg);
            er.status = ExperimentResult::Status::completed;
            write_selection_csv(er.profile, ds.covariate_names,
                                out_dir / selection_filename(er.spec));
        }
    };
    int jobs = std::max(1, opts.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (const auto& er : result.experiments) {
        switch (er.status) {
            case ExperimentResult::Status::completed: ++result.completed; break;
            case ExperimentResult::Status::skipped_empty: ++result.skipped_empty; break;
            case ExperimentResult::Status::skipped_single_class:
                ++result.skipped_single_class;
                break;
        }
    }

    for (Cohort c : all_cohorts) {
        std::vector<SelectionProfile> profiles;
        for (const auto& er : result.experiments)
            if (er.spec.cohort == c && er.status == ExperimentResult::Status::completed)
                profiles.push_back(er.profile);
        result.experiments_used[c] = static_cast<int>(profiles.size());
        result.importance[c] = week_invariant_importance(profiles);
        write_importance_csv(result.importance[c],
                             out_dir / ("importance_" + std::string(to_string(c)) + ".csv"));
    }

    nlohmann::json summary;
    summary["horizon"] = result.horizon;
    summary["attempted"] = result.attempted;
    summary["completed"] = result.completed;
    summary["skipped_empty"] = result.skipped_empty;
    summary["skipped_single_class"] = result.skipped_single_class;
    for (Cohort c : all_cohorts)
        summary["experiments_used"][to_string(c)] = result.experiments_used[c];
    write_file_atomic(out_dir / "sweep_summary.json", summary.dump(2) + "\n");
    return result;
}

// Features ordered by weight descending, ties broken by feature id ascending
// (the canonical feature order).
inline std::vector<int> rank_features(const std::vector<double>& weights) {
    std::vector<int> order(num_features);
    for (int i = 0; i < num_features; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return weights[a] > weights[b]; });
    return order;
}

struct CohortReport {
    Cohort cohort;
    std::vector<double> weights;
    std::vector<int> order;  // feature indices, best first
};

inline std::vector<CohortReport> collect_reports(const std::filesystem::path& dir) {
    std::vector<CohortReport> out;
    for (Cohort c : all_cohorts) {
        auto path = dir / ("importance_" + std::string(to_string(c)) + ".csv");
        if (!std::filesystem::exists(path)) continue;
        CohortReport r;
        r.cohort = c;
        r.weights = read_importance_csv(path);
        r.order = rank_features(r.weights);
        out.push_back(std::move(r));
    }
    return out;
}

inline std::string render_report_table(const std::vector<CohortReport>& reports) {
    std::string out;
    for (const auto& r : reports) {
        out += std::string("cohort: ") + to_string(r.cohort) + "\n";
        out += "  rank  feature  weight\n";
        for (int i = 0; i < num_features; ++i) {
            char line[80];
            std::snprintf(line, sizeof(line), "  %4d  %-7s  %.6f\n", i + 1,
                          feature_names()[r.order[i]].c_str(), r.weights[r.order[i]]);
            out += line;
        }
        out += "  top 5:";
        for (int i = 0; i < 5 && i < num_features; ++i)
            out += " " + feature_names()[r.order[i]];
        out += "\n\n";
    }
    return out;
}

inline void write_report_csv(const std::vector<CohortReport>& reports,
                             const std::filesystem::path& path) {
    std::string out = "cohort,rank,feature,weight\n";
    for (const auto& r : reports)
        for (int i = 0; i < num_features; ++i)
            out += std::string(to_string(r.cohort)) + "," + std::to_string(i + 1) + "," +
                   feature_names()[r.order[i]] + "," + format_sig9(r.weights[r.order[i]]) + "\n";
    write_file_atomic(path, out);
}

}  // namespace stopout
