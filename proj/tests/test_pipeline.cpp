#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "stopout/pipeline.hpp"
#include "stopout/synthgen.hpp"
#include "support/tempdir.hpp"

using namespace stopout;

namespace {

std::string read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

EventStore generated_store(std::uint64_t seed, int learners, int weeks) {
    GeneratorConfig cfg;
    cfg.num_learners = learners;
    cfg.num_weeks = weeks;
    cfg.seed = seed;
    cfg.forum_fraction = 0.3;
    cfg.wiki_fraction = 0.2;
    test_support::TempDir dir;
    generate(cfg, dir.path());
    auto [store, report] = ingest_directory(dir.path(), dir / "calendar.json");
    return store;
}

}  // namespace

TEST_CASE("sweep writes the full report set") {
    EventStore store = generated_store(101, 80, 4);
    SweepOptions opts;
    opts.rlr.n_trials = 10;
    opts.rlr.seed = 1;

    test_support::TempDir out;
    SweepResult res = run_sweep(store, opts, out.path());

    CHECK(res.horizon == 3);
    CHECK(res.attempted == static_cast<int>(4 * enumerate_problems(3).size()));
    CHECK(res.completed + res.skipped_empty + res.skipped_single_class == res.attempted);

    CHECK(std::filesystem::exists(out / "features.csv"));
    CHECK(std::filesystem::exists(out / "cohorts.csv"));
    CHECK(std::filesystem::exists(out / "sweep_summary.json"));
    for (Cohort c : all_cohorts) {
        auto imp = out / ("importance_" + std::string(to_string(c)) + ".csv");
        REQUIRE(std::filesystem::exists(imp));
        auto w = read_importance_csv(imp);
        double sum = 0;
        for (double v : w) sum += v;
        CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-6));
    }
    for (const auto& er : res.experiments) {
        bool file = std::filesystem::exists(out / selection_filename(er.spec));
        CHECK(file == (er.status == ExperimentResult::Status::completed));
    }

    nlohmann::json summary = nlohmann::json::parse(read_bytes(out / "sweep_summary.json"));
    CHECK(summary["attempted"] == res.attempted);
    CHECK(summary["completed"] == res.completed);
}

TEST_CASE("sweep output is independent of the job count") {
    EventStore store = generated_store(102, 60, 4);
    SweepOptions opts;
    opts.rlr.n_trials = 8;
    opts.rlr.seed = 3;

    test_support::TempDir serial, parallel;
    opts.jobs = 1;
    run_sweep(store, opts, serial.path());
    opts.jobs = 4;
    run_sweep(store, opts, parallel.path());

    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(serial.path()))
        files.push_back(e.path().filename());
    std::sort(files.begin(), files.end());
    REQUIRE_FALSE(files.empty());
    for (const auto& f : files) {
        INFO(f.string());
        REQUIRE(std::filesystem::exists(parallel / f));
        CHECK(read_bytes(serial / f) == read_bytes(parallel / f));
    }
}

TEST_CASE("sweep validates the horizon") {
    EventStore store = generated_store(103, 20, 3);
    SweepOptions opts;
    opts.horizon = 3;  // num_weeks is 3, target weeks would overflow
    test_support::TempDir out;
    CHECK_THROWS_AS(run_sweep(store, opts, out.path()), DataError);
}

TEST_CASE("feature ranking and report rendering") {
    std::vector<double> w(num_features, 0.01);
    w[fx210] = 0.5;
    w[fx2] = 0.3;
    auto order = rank_features(w);
    CHECK(order[0] == fx210);
    CHECK(order[1] == fx2);
    // ties fall back to canonical feature order
    CHECK(order[2] == fx3);

    test_support::TempDir dir;
    write_importance_csv(w, dir / "importance_passive_collaborator.csv");
    auto reports = collect_reports(dir.path());
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].cohort == Cohort::passive_collaborator);
    CHECK(reports[0].order[0] == fx210);

    std::string table = render_report_table(reports);
    CHECK(table.find("cohort: passive_collaborator") != std::string::npos);
    CHECK(table.find("top 5: x210 x2") != std::string::npos);

    write_report_csv(reports, dir / "report.csv");
    auto lines = read_lines(dir / "report.csv");
    REQUIRE(lines.size() >= 2);
    CHECK(lines[0] == "cohort,rank,feature,weight");
    CHECK(lines[1] == "passive_collaborator,1,x210,0.5");
}
