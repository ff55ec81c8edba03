#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "stopout/dataset.hpp"
#include "support/random_store.hpp"
#include "support/tempdir.hpp"

using namespace stopout;

TEST_CASE("problem enumeration") {
    auto pairs = enumerate_problems(14);
    CHECK(pairs.size() == 91);
    std::set<std::pair<int, int>> uniq(pairs.begin(), pairs.end());
    CHECK(uniq.size() == pairs.size());
    for (auto [lead, lag] : pairs) {
        CHECK(lead >= 1);
        CHECK(lag >= 1);
        CHECK(lead + lag <= 14);
    }
    CHECK(pairs.front() == std::make_pair(1, 1));
    CHECK(pairs.back() == std::make_pair(1, 13));

    CHECK(enumerate_problems(2).size() == 1);
    CHECK(enumerate_problems(1).empty());
}

TEST_CASE("covariate names are week-major") {
    CHECK(covariate_name(0) == "x2@w1");
    CHECK(covariate_name(26) == "x210@w1");
    CHECK(covariate_name(27) == "x2@w2");
    CHECK(covariate_name(2 * 27 + 3) == "x5@w3");
}

TEST_CASE("zscore columns") {
    Eigen::MatrixXd X(4, 2);
    X << 1, 5, 2, 5, 3, 5, 4, 5;
    auto scalers = zscore_columns(X);
    CHECK(scalers[0].mean == 2.5);
    CHECK_THAT(scalers[0].stddev, Catch::Matchers::WithinAbs(std::sqrt(1.25), 1e-12));
    CHECK_THAT(X.col(0).sum(), Catch::Matchers::WithinAbs(0.0, 1e-12));
    CHECK_THAT(X.col(0).array().square().sum(), Catch::Matchers::WithinAbs(4.0, 1e-9));
    // constant column zeroed, flagged via stddev 0
    CHECK(scalers[1].stddev == 0.0);
    CHECK(X.col(1).isZero());
}

TEST_CASE("dataset assembly filters by cohort and persistence") {
    EventStore store = test_support::make_random_store(21, 16, 5);
    FeatureMatrix m = extract_all(store);
    CohortMap cohorts = assign_cohorts(store);

    PredictionSpec spec;
    spec.lead = 2;
    spec.lag = 2;
    spec.cohort = Cohort::passive_collaborator;
    PredictionDataset ds = build_dataset(spec, m, cohorts);

    std::set<std::string> in_ds(ds.learner_ids.begin(), ds.learner_ids.end());
    CHECK(in_ds.size() == ds.learner_ids.size());
    for (std::size_t li = 0; li < m.learners.size(); ++li) {
        const std::string& id = m.learners[li];
        bool active = m.x1[m.row(li, 1)] == 1.0 && m.x1[m.row(li, 2)] == 1.0;
        bool expected = cohorts.at(id) == spec.cohort && active;
        CHECK(in_ds.count(id) == (expected ? 1u : 0u));
    }

    REQUIRE(ds.covariate_names.size() == 54);
    CHECK(ds.covariate_names[0] == "x2@w1");
    CHECK(ds.covariate_names[53] == "x210@w2");

    // labels come from the target week
    for (std::size_t i = 0; i < ds.learner_ids.size(); ++i) {
        int li = m.learner_index(ds.learner_ids[i]);
        CHECK(ds.y[static_cast<Eigen::Index>(i)] == m.x1[m.row(li, 4)]);
    }

    // z-scoring round-trips back to the raw features
    for (std::size_t i = 0; i < ds.learner_ids.size(); ++i) {
        int li = m.learner_index(ds.learner_ids[i]);
        for (int j = 0; j < 54; ++j) {
            const auto& sc = ds.scaler[j];
            double raw = m.value(li, j / num_features + 1, j % num_features);
            double recon = sc.stddev > 0
                               ? ds.X(static_cast<Eigen::Index>(i), j) * sc.stddev + sc.mean
                               : sc.mean;
            CHECK_THAT(recon, Catch::Matchers::WithinAbs(raw, 1e-9));
        }
    }
}

TEST_CASE("scaled columns are standardized, eligibility shrinks with lag") {
    EventStore store = test_support::make_random_store(24, 20, 5);
    FeatureMatrix m = extract_all(store);
    CohortMap cohorts = assign_cohorts(store);

    for (Cohort c : all_cohorts) {
        std::set<std::string> prev;
        bool have_prev = false;
        for (int lag = 1; lag <= 3; ++lag) {
            PredictionSpec spec;
            spec.lead = 1;
            spec.lag = lag;
            spec.cohort = c;
            PredictionDataset ds = build_dataset(spec, m, cohorts);

            std::set<std::string> cur(ds.learner_ids.begin(), ds.learner_ids.end());
            if (have_prev)
                for (const auto& id : cur) CHECK(prev.count(id) == 1);
            prev = cur;
            have_prev = true;

            if (ds.empty()) continue;
            const double n = static_cast<double>(ds.X.rows());
            for (Eigen::Index j = 0; j < ds.X.cols(); ++j) {
                double mean = ds.X.col(j).sum() / n;
                double var = (ds.X.col(j).array() - mean).square().sum() / n;
                CHECK(std::abs(mean) < 1e-9);
                if (ds.scaler[j].stddev > 0)
                    CHECK(std::abs(var - 1.0) < 1e-6);
                else
                    CHECK(ds.X.col(j).isZero());
            }

            // y=1 means the learner still submits at or after the target week
            for (std::size_t i = 0; i < ds.learner_ids.size(); ++i) {
                if (ds.y[static_cast<Eigen::Index>(i)] != 1.0) continue;
                int li = m.learner_index(ds.learner_ids[i]);
                CHECK(m.x1[m.row(li, spec.target_week())] == 1.0);
                bool later_submission = false;
                for (const auto& s : store.submissions) {
                    if (s.learner != ds.learner_ids[i]) continue;
                    auto w = store.calendar.week_of(s.timestamp);
                    if (w && *w >= spec.target_week()) later_submission = true;
                }
                CHECK(later_submission);
            }
        }
    }
}

TEST_CASE("dataset edge cases") {
    EventStore store = test_support::make_random_store(22, 6, 3);
    FeatureMatrix m = extract_all(store);
    CohortMap cohorts = assign_cohorts(store);

    PredictionSpec spec;
    spec.lead = 3;
    spec.lag = 1;
    CHECK_THROWS_AS(build_dataset(spec, m, cohorts), DataError);  // target week 4 of 3

    // force everyone into one cohort so another is empty
    for (auto& [id, c] : cohorts) c = Cohort::passive_collaborator;
    spec.lead = 1;
    spec.cohort = Cohort::wiki_contributor;
    PredictionDataset ds = build_dataset(spec, m, cohorts);
    CHECK(ds.empty());
    CHECK(ds.single_class());
}

TEST_CASE("dataset csv round trip") {
    EventStore store = test_support::make_random_store(23, 10, 4);
    FeatureMatrix m = extract_all(store);
    CohortMap cohorts = assign_cohorts(store);
    PredictionSpec spec;
    spec.lead = 1;
    spec.lag = 2;
    PredictionDataset ds = build_dataset(spec, m, cohorts);
    if (ds.empty()) return;

    test_support::TempDir dir;
    write_dataset_csv(ds, dir / "d.csv");
    PredictionDataset back = read_dataset_csv(dir / "d.csv");
    CHECK(back.covariate_names == ds.covariate_names);
    REQUIRE(back.X.rows() == ds.X.rows());
    CHECK(back.X == ds.X);  // %.17g is bit-exact for doubles
    CHECK(back.y == ds.y);
}
