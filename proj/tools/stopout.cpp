// Command-line frontend for the stopout prediction pipeline:
// ingest raw logs, generate synthetic courses, extract weekly features,
// build lead/lag datasets, run randomized logistic regression, sweep all
// experiments, and render importance reports.

#include <chrono>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stopout/dataset.hpp"
#include "stopout/featurize.hpp"
#include "stopout/ingest.hpp"
#include "stopout/manifest.hpp"
#include "stopout/pipeline.hpp"
#include "stopout/stability.hpp"
#include "stopout/synthgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// exit codes: 0 ok, 1 usage, 2 data error, 3 internal
constexpr int exit_usage = 1;
constexpr int exit_data = 2;
constexpr int exit_internal = 3;

json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw stopout::DataError("cannot open config " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw stopout::DataError("malformed config " + path);
    return j;
}

// Precedence: explicit flag > config file > built-in default.
template <typename T>
void apply_config(const CLI::App* cmd, const std::string& flag, const json& cfg,
                  const std::string& key, T& value) {
    if (cmd->count(flag) == 0 && cfg.contains(key)) value = cfg[key].get<T>();
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "stopout: longitudinal course-dropout feature extraction and stability-selection "
        "pipeline"};
    app.require_subcommand(1);

    // ingest
    auto* c_ingest = app.add_subcommand("ingest", "Parse raw NDJSON event logs into a store");
    std::string in_events, in_calendar, in_out, in_config;
    c_ingest->add_option("--events", in_events, "Directory of *.ndjson event logs")->required();
    c_ingest->add_option("--calendar", in_calendar, "Course calendar JSON")->required();
    c_ingest->add_option("--out", in_out, "Output store directory")->required();
    c_ingest->add_option("--config", in_config, "Config JSON file");

    // synth
    auto* c_synth = app.add_subcommand("synth", "Generate a synthetic course or a fixture");
    std::string sy_config, sy_fixture, sy_out;
    std::uint64_t sy_seed = 0;
    c_synth->add_option("--config", sy_config, "Generator config JSON");
    c_synth->add_option("--fixture", sy_fixture, "Fixture name (fig2, empty, two_learners_tiny)");
    c_synth->add_option("--out", sy_out, "Output directory")->required();
    c_synth->add_option("--seed", sy_seed, "Override the config seed");

    // featurize
    auto* c_feat = app.add_subcommand("featurize", "Compute the per-learner per-week features");
    std::string ft_store, ft_out, ft_cohorts, ft_config;
    bool ft_posts_only = false;
    c_feat->add_option("--store", ft_store, "Store directory")->required();
    c_feat->add_option("--out", ft_out, "Output features.csv")->required();
    c_feat->add_option("--cohorts-out", ft_cohorts, "Output cohorts.csv (default: sibling)");
    c_feat->add_flag("--x5-posts-only", ft_posts_only,
                     "Restrict x5 to forum posts, excluding replies");
    c_feat->add_option("--config", ft_config, "Config JSON file");

    // dataset
    auto* c_ds = app.add_subcommand("dataset", "Build one lead/lag prediction dataset");
    std::string ds_features, ds_cohorts, ds_cohort, ds_out, ds_config;
    int ds_lead = 1, ds_lag = 1;
    c_ds->add_option("--features", ds_features, "features.csv")->required();
    c_ds->add_option("--cohorts", ds_cohorts, "cohorts.csv")->required();
    c_ds->add_option("--lead", ds_lead, "Weeks ahead to predict")->required();
    c_ds->add_option("--lag", ds_lag, "Weeks of covariates")->required();
    c_ds->add_option("--cohort", ds_cohort, "Cohort name")->required();
    c_ds->add_option("--out", ds_out, "Output dataset CSV (default: canonical name)");
    c_ds->add_option("--config", ds_config, "Config JSON file");

    // rlr
    auto* c_rlr = app.add_subcommand("rlr", "Randomized logistic regression on a dataset");
    std::string rl_dataset, rl_out, rl_config;
    std::uint64_t rl_seed = 0;
    double rl_lambda = 0.0, rl_alpha = 0.5, rl_threshold = 0.25, rl_subsample = 0.75;
    int rl_trials = 200;
    c_rlr->add_option("--dataset", rl_dataset, "Dataset CSV")->required();
    c_rlr->add_option("--out", rl_out, "Output selection CSV")->required();
    c_rlr->add_option("--lambda", rl_lambda, "Base penalty (<=0: 0.1 * lambda_max)");
    c_rlr->add_option("--alpha", rl_alpha, "Penalty randomization in (0,1]");
    c_rlr->add_option("--seed", rl_seed, "RNG seed");
    c_rlr->add_option("--trials", rl_trials, "Number of randomized fits");
    c_rlr->add_option("--threshold", rl_threshold, "Coefficient selection threshold");
    c_rlr->add_option("--subsample", rl_subsample, "Subsample fraction");
    c_rlr->add_option("--config", rl_config, "Config JSON file");

    // sweep
    auto* c_sweep = app.add_subcommand("sweep", "Run every lead/lag experiment for all cohorts");
    std::string sw_store, sw_out, sw_config;
    std::uint64_t sw_seed = 0;
    int sw_horizon = 0, sw_jobs = 1, sw_trials = 200;
    double sw_lambda = 0.0, sw_alpha = 0.5, sw_threshold = 0.25, sw_subsample = 0.75;
    bool sw_posts_only = false;
    c_sweep->add_option("--store", sw_store, "Store directory")->required();
    c_sweep->add_option("--out", sw_out, "Output report directory")->required();
    c_sweep->add_option("--seed", sw_seed, "RNG seed");
    c_sweep->add_option("--horizon", sw_horizon, "Max lead+lag (default: num_weeks - 1)");
    c_sweep->add_option("--jobs", sw_jobs, "Parallel experiments");
    c_sweep->add_option("--trials", sw_trials, "Randomized fits per experiment");
    c_sweep->add_option("--lambda", sw_lambda, "Base penalty (<=0: 0.1 * lambda_max)");
    c_sweep->add_option("--alpha", sw_alpha, "Penalty randomization in (0,1]");
    c_sweep->add_option("--threshold", sw_threshold, "Coefficient selection threshold");
    c_sweep->add_option("--subsample", sw_subsample, "Subsample fraction");
    c_sweep->add_flag("--x5-posts-only", sw_posts_only, "Restrict x5 to forum posts");
    c_sweep->add_option("--config", sw_config, "Config JSON file");

    // report
    auto* c_report = app.add_subcommand("report", "Rank features from importance files");
    std::string rp_in, rp_out, rp_cohort;
    c_report->add_option("--in", rp_in, "Directory with importance_*.csv")->required();
    c_report->add_option("--out", rp_out, "Output directory for report.csv (default: --in)");
    c_report->add_option("--cohort", rp_cohort, "Restrict the report to one cohort");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : exit_usage;
    }

    try {
        Timer total;

        if (*c_ingest) {
            auto cfg = load_config_file(in_config);
            stopout::RunManifest manifest;
            manifest.command = "ingest";
            auto [store, report] = stopout::ingest_directory(in_events, in_calendar);
            stopout::save_store(store, in_out);
            stopout::write_file_atomic(fs::path(in_out) / "curation_report.json",
                                       report.to_json().dump(2) + "\n");
            manifest.config = {{"events", in_events}, {"calendar", in_calendar}, {"out", in_out}};
            manifest.add_input(in_events);
            manifest.add_input(in_calendar);
            manifest.stage_seconds["total"] = total.seconds();
            manifest.write(fs::path(in_out) / "manifest_ingest.json");
            std::cout << "ingested " << report.accepted << "/" << report.total << " lines, "
                      << store.learners.size() << " learners, " << report.rejected
                      << " rejected, " << report.out_of_range << " out of range\n";
        } else if (*c_synth) {
            stopout::RunManifest manifest;
            manifest.command = "synth";
            if (!sy_fixture.empty()) {
                stopout::emit_fixture(sy_fixture, sy_out);
                manifest.config = {{"fixture", sy_fixture}, {"out", sy_out}};
            } else {
                if (sy_config.empty())
                    throw stopout::DataError("synth: either --config or --fixture is required");
                stopout::GeneratorConfig gc = stopout::load_generator_config(sy_config);
                if (c_synth->count("--seed") > 0) gc.seed = sy_seed;
                stopout::generate(gc, sy_out);
                manifest.add_input(sy_config);
                manifest.config = {{"config", sy_config}, {"out", sy_out}, {"seed", gc.seed}};
            }
            manifest.stage_seconds["total"] = total.seconds();
            manifest.write(fs::path(sy_out) / "manifest_synth.json");
            std::cout << "wrote " << sy_out << "\n";
        } else if (*c_feat) {
            auto cfg = load_config_file(ft_config);
            apply_config(c_feat, "--x5-posts-only", cfg, "x5_posts_only", ft_posts_only);
            stopout::FeaturizeOptions opts;
            opts.x5_posts_only = ft_posts_only;
            std::vector<std::string> warnings;
            stopout::EventStore store = stopout::load_store(ft_store, &warnings);
            stopout::FeaturizeReport freport;
            stopout::FeatureMatrix m = stopout::extract_all(store, opts, &freport);
            stopout::write_features_csv(m, ft_out);
            fs::path cohorts_path = ft_cohorts.empty()
                                        ? fs::path(ft_out).parent_path() / "cohorts.csv"
                                        : fs::path(ft_cohorts);
            stopout::write_cohorts_csv(stopout::assign_cohorts(store), cohorts_path);

            stopout::RunManifest manifest;
            manifest.command = "featurize";
            manifest.config = {{"store", ft_store},
                               {"out", ft_out},
                               {"x5_posts_only", opts.x5_posts_only}};
            manifest.add_input(ft_store);
            manifest.warnings = warnings;
            if (freport.unknown_problem_submissions > 0)
                manifest.warnings.push_back(std::to_string(freport.unknown_problem_submissions) +
                                            " submissions referenced unknown problems");
            for (int w : freport.weeks_without_homework)
                manifest.warnings.push_back("week " + std::to_string(w) +
                                            " has no homework problems (grade fixed at 0)");
            for (int w : freport.weeks_without_lab)
                manifest.warnings.push_back("week " + std::to_string(w) +
                                            " has no lab problems (grade fixed at 0)");
            manifest.stage_seconds["total"] = total.seconds();
            manifest.write(fs::path(ft_out).parent_path() / "manifest_featurize.json");
            std::cout << "wrote " << ft_out << " (" << m.learners.size() << " learners x "
                      << m.num_weeks << " weeks)\n";
        } else if (*c_ds) {
            auto cohort = stopout::parse_cohort(ds_cohort);
            if (!cohort) throw stopout::DataError("unknown cohort: " + ds_cohort);
            stopout::PredictionSpec spec{ds_lead, ds_lag, *cohort};
            stopout::FeatureMatrix m = stopout::read_features_csv(ds_features);
            stopout::CohortMap cohorts = stopout::read_cohorts_csv(ds_cohorts);
            stopout::PredictionDataset ds = stopout::build_dataset(spec, m, cohorts);
            fs::path out = ds_out.empty()
                               ? fs::path("dataset_lead" + std::to_string(ds_lead) + "_lag" +
                                          std::to_string(ds_lag) + "_" + ds_cohort + ".csv")
                               : fs::path(ds_out);
            stopout::write_dataset_csv(ds, out);
            stopout::RunManifest manifest;
            manifest.command = "dataset";
            manifest.config = {{"features", ds_features}, {"cohorts", ds_cohorts},
                               {"lead", ds_lead},          {"lag", ds_lag},
                               {"cohort", ds_cohort}};
            manifest.add_input(ds_features);
            manifest.add_input(ds_cohorts);
            if (ds.empty()) manifest.warnings.push_back("no eligible learners; dataset is empty");
            manifest.stage_seconds["total"] = total.seconds();
            manifest.write(out.parent_path() / "manifest_dataset.json");
            if (ds.empty())
                std::cout << "notice: no eligible learners for this experiment\n";
            std::cout << "wrote " << out.string() << " (" << ds.learner_ids.size() << " rows)\n";
        } else if (*c_rlr) {
            auto cfg = load_config_file(rl_config);
            apply_config(c_rlr, "--lambda", cfg, "lambda", rl_lambda);
            apply_config(c_rlr, "--alpha", cfg, "alpha", rl_alpha);
            apply_config(c_rlr, "--seed", cfg, "seed", rl_seed);
            apply_config(c_rlr, "--trials", cfg, "trials", rl_trials);
            apply_config(c_rlr, "--threshold", cfg, "threshold", rl_threshold);
            apply_config(c_rlr, "--subsample", cfg, "subsample", rl_subsample);
            stopout::PredictionDataset ds = stopout::read_dataset_csv(rl_dataset);
            if (ds.X.cols() % stopout::num_features == 0)
                ds.spec.lag = static_cast<int>(ds.X.cols()) / stopout::num_features;
            stopout::RLRConfig rc;
            rc.n_trials = rl_trials;
            rc.lambda = rl_lambda;
            rc.alpha = rl_alpha;
            rc.seed = rl_seed;
            rc.threshold = rl_threshold;
            rc.subsample_fraction = rl_subsample;
            stopout::SelectionProfile profile = stopout::rlr_run(ds, rc);
            stopout::write_selection_csv(profile, ds.covariate_names, rl_out);
            stopout::RunManifest manifest;
            manifest.command = "rlr";
            manifest.config = {{"dataset", rl_dataset}, {"lambda", profile.lambda_used},
                               {"alpha", rl_alpha},     {"seed", rl_seed},
                               {"trials", rl_trials},   {"threshold", rl_threshold}};
            manifest.add_input(rl_dataset);
            if (profile.failed_trials > 0)
                manifest.warnings.push_back(std::to_string(profile.failed_trials) +
                                            " trials kept a single-class subsample");
            manifest.stage_seconds["total"] = total.seconds();
            manifest.write(fs::path(rl_out).parent_path() / "manifest_rlr.json");
            std::cout << "wrote " << rl_out << " (lambda=" << profile.lambda_used << ")\n";
        } else if (*c_sweep) {
            auto cfg = load_config_file(sw_config);
            apply_config(c_sweep, "--seed", cfg, "seed", sw_seed);
            apply_config(c_sweep, "--horizon", cfg, "horizon", sw_horizon);
            apply_config(c_sweep, "--jobs", cfg, "jobs", sw_jobs);
            apply_config(c_sweep, "--trials", cfg, "trials", sw_trials);
            apply_config(c_sweep, "--lambda", cfg, "lambda", sw_lambda);
            apply_config(c_sweep, "--alpha", cfg, "alpha", sw_alpha);
            apply_config(c_sweep, "--threshold", cfg, "threshold", sw_threshold);
            apply_config(c_sweep, "--subsample", cfg, "subsample", sw_subsample);
            apply_config(c_sweep, "--x5-posts-only", cfg, "x5_posts_only", sw_posts_only);

            stopout::EventStore store = stopout::load_store(sw_store);
            stopout::SweepOptions opts;
            opts.horizon = sw_horizon;
            opts.jobs = sw_jobs;
            opts.rlr.seed = sw_seed;
            opts.rlr.n_trials = sw_trials;
            opts.rlr.lambda = sw_lambda;
            opts.rlr.alpha = sw_alpha;
            opts.rlr.threshold = sw_threshold;
            opts.rlr.subsample_fraction = sw_subsample;
            opts.featurize.x5_posts_only = sw_posts_only;

            stopout::RunManifest manifest;
            manifest.command = "sweep";
            manifest.config = {{"store", sw_store},     {"out", sw_out},
                               {"seed", sw_seed},       {"horizon", sw_horizon},
                               {"jobs", sw_jobs},       {"trials", sw_trials},
                               {"lambda", sw_lambda},   {"alpha", sw_alpha},
                               {"threshold", sw_threshold}, {"subsample", sw_subsample}};
            manifest.add_input(sw_store);
            try {
                stopout::SweepResult result = stopout::run_sweep(store, opts, sw_out);
                manifest.stage_seconds["total"] = total.seconds();
                manifest.write(fs::path(sw_out) / "manifest_sweep.json");
                std::cout << "sweep: " << result.attempted << " slots attempted, "
                          << result.completed << " completed, " << result.skipped_empty
                          << " empty, " << result.skipped_single_class << " single-class\n";
            } catch (...) {
                // keep partial outputs, note the failure point
                manifest.failed = true;
                manifest.failure = "sweep aborted";
                manifest.stage_seconds["total"] = total.seconds();
                std::error_code ec;
                fs::create_directories(sw_out, ec);
                manifest.write(fs::path(sw_out) / "manifest_sweep.json");
                throw;
            }
        } else if (*c_report) {
            auto reports = stopout::collect_reports(rp_in);
            if (!rp_cohort.empty()) {
                auto c = stopout::parse_cohort(rp_cohort);
                if (!c) throw stopout::DataError("unknown cohort " + rp_cohort);
                std::erase_if(reports, [&](const auto& r) { return r.cohort != *c; });
            }
            if (reports.empty())
                throw stopout::DataError("no importance_*.csv files in " + rp_in);
            std::cout << stopout::render_report_table(reports);
            fs::path out_dir = rp_out.empty() ? fs::path(rp_in) : fs::path(rp_out);
            fs::create_directories(out_dir);
            stopout::write_report_csv(reports, out_dir / "report.csv");
            stopout::RunManifest manifest;
            manifest.command = "report";
            manifest.add_input(rp_in);
            manifest.config = {{"in", rp_in}, {"cohort", rp_cohort}};
            manifest.stage_seconds["total"] = total.seconds();
            manifest.write(out_dir / "manifest_report.json");
        }
    } catch (const stopout::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_data;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return exit_internal;
    }
    return 0;
}
