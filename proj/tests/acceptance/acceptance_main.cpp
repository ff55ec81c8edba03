// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion is a self-contained end-to-end or oracle check.

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "stopout/pipeline.hpp"
#include "stopout/synthgen.hpp"
#include "support/feature_oracle.hpp"
#include "support/random_store.hpp"
#include "support/tempdir.hpp"

using namespace stopout;

namespace {

int g_failures = 0;

void run_criterion(int number, const std::string& name, const std::function<std::string()>& body) {
    std::string detail;
    bool ok = false;
    try {
        detail = body();
        ok = detail.empty();
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    if (ok) {
        std::printf("[PASS] criterion %d: %s\n", number, name.c_str());
    } else {
        std::printf("[FAIL] criterion %d: %s -- %s\n", number, name.c_str(), detail.c_str());
        ++g_failures;
    }
    std::fflush(stdout);
}

std::string read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

// ---- criterion 1: problem enumeration and sweep slot count ----

std::string check_enumeration() {
    auto pairs = enumerate_problems(14);
    if (pairs.size() != 91)
        return "enumerate_problems(14) gave " + std::to_string(pairs.size()) + " pairs, want 91";
    for (auto [lead, lag] : pairs)
        if (lead < 1 || lag < 1 || lead + lag > 14) return "out-of-range pair in enumeration";

    // a real sweep over a 15-week store must attempt 91 x 4 slots
    test_support::TempDir fixture, out;
    emit_fixture("fig2", fixture.path());
    EventStore store = load_store(fixture.path());
    SweepOptions opts;
    opts.horizon = 14;
    opts.rlr.n_trials = 2;
    SweepResult res = run_sweep(store, opts, out.path());
    if (res.attempted != 364)
        return "sweep attempted " + std::to_string(res.attempted) + " slots, want 364";
    std::string summary = read_bytes(out / "sweep_summary.json");
    if (summary.find("\"attempted\": 364") == std::string::npos)
        return "sweep summary does not record 364 attempted slots";
    return "";
}

// ---- criterion 2: hand-checked timeline durations ----

std::string check_fig2_durations() {
    test_support::TempDir dir;
    emit_fixture("fig2", dir.path());
    EventStore store = load_store(dir.path());
    LearnerEvents ev = store.learner_events("u1");
    infer_durations(ev.observed);
    if (ev.observed.size() != 12)
        return "expected 12 observed events, got " + std::to_string(ev.observed.size());
    if (ev.observed[0].duration_s != 28)
        return "first duration " + std::to_string(*ev.observed[0].duration_s) + ", want 28";
    if (ev.observed[1].duration_s != 35)
        return "second duration " + std::to_string(*ev.observed[1].duration_s) + ", want 35";
    if (ev.observed.back().duration_s != 3600)
        return "final duration " + std::to_string(*ev.observed.back().duration_s) +
               ", want the 3600 cap";

    FeatureMatrix m = extract_all(store);
    double x7 = m.value(0, 1, fx7);
    if (x7 != 3.0) return "x7 for week 1 is " + std::to_string(x7) + ", want 3";
    return "";
}

// ---- criterion 3: oracle equivalence on a 20x4 store ----

std::string check_feature_oracle() {
    EventStore store = test_support::make_random_store(2024, 20, 4);
    FeatureMatrix got = extract_all(store);
    FeatureMatrix want = test_support::oracle_extract(store);
    if (got.learners != want.learners) return "learner sets differ";
    if (got.x1 != want.x1) return "x1 labels differ";
    for (std::size_t r = 0; r < got.values.size(); ++r)
        for (int k = 0; k < num_features; ++k)
            if (got.values[r][k] != want.values[r][k])
                return "mismatch at row " + std::to_string(r) + " feature " + feature_names()[k] +
                       ": " + format_exact(got.values[r][k]) + " vs " +
                       format_exact(want.values[r][k]);
    return "";
}

// ---- criterion 4: identities and bounds on 1000 randomized stores ----

std::string check_feature_identities() {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        EventStore store = test_support::make_random_store(seed, 4, 3);
        FeatureMatrix m = extract_all(store);
        for (std::size_t li = 0; li < m.learners.size(); ++li) {
            double prev = 1.0;
            for (int w = 1; w <= m.num_weeks; ++w) {
                const auto& x = m.values[m.row(li, w)];
                double x1 = m.x1[m.row(li, w)];
                std::string at = "seed " + std::to_string(seed) + " learner " +
                                 std::to_string(li) + " week " + std::to_string(w);
                if (x1 > prev) return "x1 increased at " + at;
                prev = x1;
                if (x[fx14] != x[fx3] + x[fx4]) return "x14 != x3+x4 at " + at;
                if (x[fx6] > 0 && std::abs(x[fx9] * x[fx6] - x[fx7]) > 1e-6 * x[fx7])
                    return "x9*x6 != x7 at " + at;
                if (x[fx7] > 0 && std::abs(x[fx209] * x[fx7] - x[fx208]) > 1e-6 * (x[fx208] + 1))
                    return "x209*x7 != x208 at " + at;
                for (int f : {fx2, fx3, fx4, fx6, fx7, fx8, fx12, fx13, fx14, fx15, fx16, fx17,
                              fx18, fx201, fx208})
                    if (x[f] < 0) return feature_names()[f] + " negative at " + at;
                for (int f : {fx204, fx206, fx209})
                    if (x[f] < 0 || x[f] > 1) return feature_names()[f] + " out of [0,1] at " + at;
                for (int f : {fx202, fx203})
                    if (x[f] < 0 || x[f] > 100)
                        return feature_names()[f] + " out of [0,100] at " + at;
                for (int f : {fx205, fx207})
                    if (x[f] < -1 || x[f] > 1) return feature_names()[f] + " out of [-1,1] at " + at;
                if (x[fx15] > x[fx2]) return "x15 > x2 at " + at;
                if (x[fx15] > 3600.0) return "duration cap violated at " + at;
            }
        }
    }
    return "";
}

// ---- criterion 5: optimizer correctness ----

std::string check_optimizer() {
    // 5a: gradient vs central finite differences on 50 random instances
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        int n = 20 + static_cast<int>(rng.below(81));  // <= 100
        int p = 2 + static_cast<int>(rng.below(19));   // <= 20
        Eigen::MatrixXd X(n, p);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
        Eigen::VectorXd ysign(n);
        for (int i = 0; i < n; ++i) ysign[i] = rng.bernoulli(0.5) ? 1.0 : -1.0;
        Eigen::VectorXd w(p);
        for (int j = 0; j < p; ++j) w[j] = 0.5 * rng.normal();
        double b = 0.5 * rng.normal();

        Eigen::VectorXd g;
        double gb = 0.0;
        logreg::smooth_logistic_loss(X, ysign, w, b, &g, &gb);
        const double h = 1e-5;
        for (int j = 0; j < p; ++j) {
            Eigen::VectorXd wp = w, wm = w;
            wp[j] += h;
            wm[j] -= h;
            double fd = (logreg::smooth_logistic_loss(X, ysign, wp, b) -
                         logreg::smooth_logistic_loss(X, ysign, wm, b)) /
                        (2 * h);
            double denom = std::max(std::abs(fd), 1e-8);
            if (std::abs(g[j] - fd) / denom > 1e-5)
                return "gradient mismatch on instance " + std::to_string(seed);
        }
        double fdb = (logreg::smooth_logistic_loss(X, ysign, w, b + h) -
                      logreg::smooth_logistic_loss(X, ysign, w, b - h)) /
                     (2 * h);
        if (std::abs(gb - fdb) / std::max(std::abs(fdb), 1e-8) > 1e-5)
            return "intercept gradient mismatch on instance " + std::to_string(seed);
    }

    // 5b: subgradient certificate after a fit at tol 1e-7
    {
        Rng rng(77);
        const int n = 90, p = 12;
        Eigen::MatrixXd X(n, p);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i)
            y[i] = rng.bernoulli(1.0 / (1.0 + std::exp(-X(i, 0) + 0.5 * X(i, 1)))) ? 1.0 : 0.0;
        y[0] = 0.0;
        y[n - 1] = 1.0;
        Eigen::VectorXd pen = Eigen::VectorXd::Constant(p, 0.03);
        LogRegModel model = fit_weighted_l1_logreg(X, y, pen);
        if (!model.converged) return "fit did not converge";
        double viol = logreg::kkt_violation(X, logreg::to_sign_labels(y), model.weights,
                                            model.intercept, pen);
        if (viol > 1e-7) return "certificate violation " + format_exact(viol);

        // 5c: penalties above the null-gradient bound give the zero solution
        double lmax = logreg::lambda_max(X, y);
        LogRegModel null_model =
            fit_weighted_l1_logreg(X, y, Eigen::VectorXd::Constant(p, lmax * 1.05));
        if (!null_model.weights.isZero()) return "weights nonzero above the null bound";
        double pos = y.sum(), neg = n - pos;
        if (std::abs(null_model.intercept - std::log(pos / neg)) > 1e-4)
            return "null-model intercept off: " + format_exact(null_model.intercept);
    }

    // 5d: dense grid oracle on a fixed two-covariate instance
    {
        Rng rng(123);
        const int n = 40;
        Eigen::MatrixXd X(n, 2);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = rng.normal();
            X(i, 1) = rng.normal();
            double z = 1.5 * X(i, 0) - 1.0 * X(i, 1);
            y[i] = rng.bernoulli(1.0 / (1.0 + std::exp(-z))) ? 1.0 : 0.0;
        }
        y[0] = 0.0;
        y[n - 1] = 1.0;
        Eigen::VectorXd pen(2);
        pen << 0.05, 0.02;
        FitOptions opts;
        opts.fit_intercept = false;
        LogRegModel model = fit_weighted_l1_logreg(X, y, pen, opts);
        Eigen::VectorXd ysign = logreg::to_sign_labels(y);
        double fit_obj = logreg::l1_objective(X, ysign, model.weights, 0.0, pen);
        double best = std::numeric_limits<double>::infinity();
        Eigen::VectorXd w(2);
        for (int a = -500; a <= 500; ++a)
            for (int c = -500; c <= 500; ++c) {
                w[0] = a * 0.01;
                w[1] = c * 0.01;
                double obj = logreg::l1_objective(X, ysign, w, 0.0, pen);
                if (obj < best) best = obj;
            }
        if (fit_obj > best + 1e-3)
            return "fit objective " + format_exact(fit_obj) + " vs grid best " +
                   format_exact(best);
    }
    return "";
}

// ---- criterion 6: stability-selection recovery ----

std::string check_selection_recovery() {
    Rng rng(2025);
    const int n = 2000, p = 27, k = 3;
    PredictionDataset ds;
    ds.spec.lead = 1;
    ds.spec.lag = 1;
    ds.X.resize(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) ds.X(i, j) = rng.normal();
    ds.y.resize(n);
    for (int i = 0; i < n; ++i) {
        double z = 0.0;
        for (int j = 0; j < k; ++j) z += 3.0 * ds.X(i, j);
        ds.y[i] = rng.bernoulli(1.0 / (1.0 + std::exp(-z))) ? 1.0 : 0.0;
        ds.learner_ids.push_back("r" + std::to_string(i));
    }
    ds.y[0] = 0.0;
    ds.y[n - 1] = 1.0;
    for (int j = 0; j < p; ++j) ds.covariate_names.push_back(covariate_name(j));

    RLRConfig cfg;
    cfg.n_trials = 200;
    cfg.seed = 42;
    SelectionProfile pr = rlr_run(ds, cfg);
    for (int j = 0; j < k; ++j)
        if (pr.probs[j] < 0.8)
            return "planted covariate " + std::to_string(j) + " prob " +
                   format_sig9(pr.probs[j]) + " < 0.8";
    for (int j = k; j < p; ++j)
        if (pr.probs[j] > 0.3)
            return "noise covariate " + std::to_string(j) + " prob " + format_sig9(pr.probs[j]) +
                   " > 0.3";
    return "";
}

// ---- criterion 7: sweep determinism across job counts ----

std::string check_sweep_determinism() {
    GeneratorConfig gen;
    gen.num_learners = 500;
    gen.num_weeks = 7;
    gen.seed = 314;
    gen.forum_fraction = 0.3;
    gen.wiki_fraction = 0.2;
    test_support::TempDir corpus;
    generate(gen, corpus.path());
    auto [store, report] = ingest_directory(corpus.path(), corpus / "calendar.json");

    SweepOptions opts;
    opts.horizon = 6;
    opts.rlr.n_trials = 50;
    opts.rlr.seed = 9;

    test_support::TempDir serial, parallel;
    opts.jobs = 1;
    run_sweep(store, opts, serial.path());
    opts.jobs = 3;
    run_sweep(store, opts, parallel.path());

    std::vector<std::filesystem::path> names;
    for (const auto& e : std::filesystem::directory_iterator(serial.path()))
        names.push_back(e.path().filename());
    std::sort(names.begin(), names.end());
    if (names.empty()) return "sweep produced no files";
    std::size_t parallel_count = 0;
    for (const auto& e : std::filesystem::directory_iterator(parallel.path())) {
        (void)e;
        ++parallel_count;
    }
    if (parallel_count != names.size()) return "runs produced different file sets";
    for (const auto& f : names) {
        if (!std::filesystem::exists(parallel / f)) return f.string() + " missing from jobs=3 run";
        if (read_bytes(serial / f) != read_bytes(parallel / f))
            return f.string() + " differs between jobs=1 and jobs=3";
    }
    return "";
}

// ---- criterion 8: cohorts partition the learner population ----

std::string check_cohort_partition() {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        EventStore store = test_support::make_random_store(seed, 30, 4);
        CohortMap cohorts = assign_cohorts(store);
        if (cohorts.size() != store.learners.size())
            return "cohort map does not cover every learner with events";
        std::map<Cohort, std::size_t> counts;
        for (const auto& [id, c] : cohorts) ++counts[c];
        std::size_t total = 0;
        for (const auto& [c, n] : counts) total += n;
        if (total != store.learners.size()) return "cohort counts do not sum to learner count";

        // reconcile with direct queries of the collaboration table
        for (const auto& id : store.learners) {
            bool forum = false, wiki = false;
            for (const auto& c : store.collaborations) {
                if (c.learner != id) continue;
                if (c.kind == CollabKind::wiki_edit)
                    wiki = true;
                else
                    forum = true;
            }
            Cohort want = forum && wiki ? Cohort::fully_collaborative
                          : forum       ? Cohort::forum_contributor
                          : wiki        ? Cohort::wiki_contributor
                                        : Cohort::passive_collaborator;
            if (cohorts.at(id) != want) return "cohort mismatch for " + id;
        }
    }
    return "";
}

// ---- criterion 9: end-to-end planted-signal discovery ----

std::string check_planted_signal() {
    GeneratorConfig gen;
    gen.num_learners = 800;
    gen.num_weeks = 7;
    gen.seed = 555;
    gen.auditor_fraction = 0.05;
    gen.completer_fraction = 0.45;
    gen.gradual_dropout_fraction = 0.5;
    gen.forum_fraction = 0.1;
    gen.wiki_fraction = 0.05;
    gen.planted_effects.push_back({"x210", 1, 2.5});

    test_support::TempDir corpus, out;
    generate(gen, corpus.path());
    auto [store, report] = ingest_directory(corpus.path(), corpus / "calendar.json");

    SweepOptions opts;
    opts.horizon = 6;
    opts.rlr.n_trials = 100;
    opts.rlr.seed = 7;
    opts.jobs = 3;
    run_sweep(store, opts, out.path());

    auto weights = read_importance_csv(out / "importance_passive_collaborator.csv");
    auto order = rank_features(weights);
    std::string top;
    for (int i = 0; i < 5; ++i) {
        if (!top.empty()) top += " ";
        top += feature_names()[order[i]];
        if (order[i] == fx210) return "";
    }
    return "x210 not in the passive-cohort top 5 (" + top + ")";
}

}  // namespace

int main() {
    run_criterion(1, "91 prediction problems, 364 sweep slots", check_enumeration);
    run_criterion(2, "hand-checked timeline durations and x7", check_fig2_durations);
    run_criterion(3, "feature oracle equivalence", check_feature_oracle);
    run_criterion(4, "feature identities on 1000 random stores", check_feature_identities);
    run_criterion(5, "optimizer gradient, certificate and grid oracle", check_optimizer);
    run_criterion(6, "stability-selection recovery of planted covariates", check_selection_recovery);
    run_criterion(7, "sweep determinism across job counts", check_sweep_determinism);
    run_criterion(8, "cohort partition", check_cohort_partition);
    run_criterion(9, "planted x210 signal surfaces in the passive cohort", check_planted_signal);

    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
