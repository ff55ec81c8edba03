#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "stopout/csv.hpp"
#include "stopout/featurize.hpp"
#include "stopout/ingest.hpp"
#include "stopout/rng.hpp"

namespace stopout {

struct PlantedEffect {
    std::string feature;   // e.g. "x210"
    int direction = 1;     // +1: larger feature value -> more likely to persist
    double strength = 1.0; // scale of the per-week dropout hazard shift
};

struct GeneratorConfig {
    int num_learners = 100;
    int num_weeks = 7;
    std::uint64_t seed = 0;
    double completer_fraction = 0.55;
    double gradual_dropout_fraction = 0.30;
    double auditor_fraction = 0.15;
    double forum_fraction = 0.15;
    double wiki_fraction = 0.05;
    double time_jitter_s = 5400;
    std::vector<PlantedEffect> planted_effects;

    void validate() const {
        double s = completer_fraction + gradual_dropout_fraction + auditor_fraction;
        if (std::abs(s - 1.0) > 1e-9)
            throw DataError("generator config: archetype fractions must sum to 1");
        if (num_weeks < 2) throw DataError("generator config: num_weeks must be >= 2");
        if (num_learners < 0) throw DataError("generator config: num_learners must be >= 0");
    }
};

inline GeneratorConfig parse_generator_config(const nlohmann::json& j) {
    GeneratorConfig cfg;
    if (j.contains("num_learners")) cfg.num_learners = j["num_learners"].get<int>();
    if (j.contains("num_weeks")) cfg.num_weeks = j["num_weeks"].get<int>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("archetypes")) {
        const auto& a = j["archetypes"];
        cfg.completer_fraction = a.value("completer", cfg.completer_fraction);
        cfg.gradual_dropout_fraction = a.value("gradual_dropout", cfg.gradual_dropout_fraction);
        cfg.auditor_fraction = a.value("auditor", cfg.auditor_fraction);
    }
    if (j.contains("collaboration")) {
        const auto& c = j["collaboration"];
        cfg.forum_fraction = c.value("forum_fraction", cfg.forum_fraction);
        cfg.wiki_fraction = c.value("wiki_fraction", cfg.wiki_fraction);
    }
    cfg.time_jitter_s = j.value("time_jitter_s", cfg.time_jitter_s);
    if (j.contains("planted_effects")) {
        for (const auto& e : j["planted_effects"]) {
            PlantedEffect pe;
            pe.feature = e.at("feature").get<std::string>();
            pe.direction = e.value("direction", 1);
            pe.strength = e.value("strength", 1.0);
            cfg.planted_effects.push_back(std::move(pe));
        }
    }
    cfg.validate();
    return cfg;
}

inline GeneratorConfig load_generator_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open generator config " + path.string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw DataError("malformed generator config " + path.string());
    return parse_generator_config(j);
}

namespace synth_detail {

constexpr Timestamp course_start = 1357516800;  // 2013-01-07T00:00:00Z
constexpr std::int64_t week_len = 7 * seconds_per_day;

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct TimedLine {
    Timestamp ts;
    std::uint64_t order;
    std::string text;
};

inline nlohmann::json base_event(const std::string& learner, const char* type, Timestamp ts) {
    nlohmann::json j;
    j["learner_id"] = learner;
    j["event_type"] = type;
    j["timestamp"] = format_rfc3339(ts);
    return j;
}

}  // namespace synth_detail

// Emits a synthetic course: events.ndjson + calendar.json (with problems
// inline) + ground_truth.csv, in the ingest wire format. Deterministic per
// seed; per-learner RNG streams keep output independent of iteration order.
inline void generate(const GeneratorConfig& cfg, const std::filesystem::path& out_dir) {
    using namespace synth_detail;
    cfg.validate();
    std::filesystem::create_directories(out_dir);

    // calendar: weekly slices, 4 homework + 2 lab problems per week, deadlines
    // one hour before the week closes
    nlohmann::json cal;
    cal["num_weeks"] = cfg.num_weeks;
    std::vector<std::string> starts;
    for (int w = 0; w <= cfg.num_weeks; ++w)
        starts.push_back(format_rfc3339(course_start + static_cast<std::int64_t>(w) * week_len));
    cal["week_starts"] = starts;
    nlohmann::json problems = nlohmann::json::array();
    for (int w = 1; w <= cfg.num_weeks; ++w) {
        Timestamp deadline = course_start + static_cast<std::int64_t>(w) * week_len - 3600;
        for (int k = 0; k < 4; ++k) {
            nlohmann::json p;
            p["problem_id"] = "hw" + std::to_string(w) + "_" + std::to_string(k);
            p["assigned_week"] = w;
            p["deadline"] = format_rfc3339(deadline);
            p["kind"] = "homework";
            problems.push_back(p);
        }
        for (int k = 0; k < 2; ++k) {
            nlohmann::json p;
            p["problem_id"] = "lab" + std::to_string(w) + "_" + std::to_string(k);
            p["assigned_week"] = w;
            p["deadline"] = format_rfc3339(deadline);
            p["kind"] = "lab";
            problems.push_back(p);
        }
    }
    cal["problems"] = problems;
    write_file_atomic(out_dir / "calendar.json", cal.dump(2) + "\n");

    std::vector<TimedLine> lines;
    std::string truth = "learner_id,archetype,stopout_week\n";
    std::uint64_t order = 0;

    int width = std::max(4, static_cast<int>(std::to_string(std::max(cfg.num_learners, 1)).size()));
    for (int li = 0; li < cfg.num_learners; ++li) {
        Rng rng = Rng::stream(cfg.seed, {1, static_cast<std::uint64_t>(li)});
        std::string id = std::to_string(li);
        id = "u" + std::string(width - std::min<std::size_t>(width, id.size()), '0') + id;

        double u = rng.next_double();
        const char* archetype = u < cfg.completer_fraction ? "completer"
                                : u < cfg.completer_fraction + cfg.gradual_dropout_fraction
                                    ? "gradual_dropout"
                                    : "auditor";
        bool auditor = std::string(archetype) == "auditor";
        double base_logit = std::string(archetype) == "completer" ? -5.0 : -1.0;

        double preferred_tod = rng.uniform(6 * 3600.0, 22 * 3600.0);
        double skill = rng.uniform(0.3, 0.9);
        double activity = rng.uniform(4.0, 14.0);
        bool forum_user = rng.bernoulli(cfg.forum_fraction);
        bool wiki_user = rng.bernoulli(cfg.wiki_fraction);

        // one latent trait per planted effect; it shifts both the behavior
        // that drives the feature and the weekly dropout hazard
        std::vector<double> traits(cfg.planted_effects.size());
        double earliness_mu = 86400.0;
        double post_len_mu = 120.0;
        for (std::size_t e = 0; e < cfg.planted_effects.size(); ++e) {
            traits[e] = rng.normal();
            const auto& pe = cfg.planted_effects[e];
            if (pe.feature == "x210") earliness_mu += traits[e] * 43200.0;
            if (pe.feature == "x2") activity *= std::exp(0.4 * traits[e]);
            if (pe.feature == "x5") post_len_mu += traits[e] * 60.0;
        }

        int stopout = 0;
        for (int w = 1; w <= cfg.num_weeks; ++w) {
            Timestamp wstart = course_start + static_cast<std::int64_t>(w - 1) * week_len;
            Timestamp wend = wstart + week_len;
            Timestamp deadline = wend - 3600;

            int n_obs = rng.poisson(activity);
            for (int k = 0; k < n_obs; ++k) {
                std::int64_t day = static_cast<std::int64_t>(rng.below(7));
                double tod = preferred_tod + rng.normal(0.0, cfg.time_jitter_s);
                tod = std::clamp(tod, 0.0, 86399.0);
                Timestamp ts = wstart + day * seconds_per_day + static_cast<std::int64_t>(tod);
                double rk = rng.next_double();
                const char* kind = rk < 0.6 ? "lecture" : rk < 0.8 ? "book" : rk < 0.9 ? "wiki" : "forum";
                nlohmann::json j = base_event(id, "page_view", ts);
                j["resource_id"] = std::string(kind) + std::to_string(rng.below(40));
                j["resource_kind"] = kind;
                lines.push_back({ts, order++, j.dump()});
            }

            if (!auditor) {
                for (int k = 0; k < 4; ++k) {
                    if (!rng.bernoulli(0.85)) continue;
                    std::string pid = "hw" + std::to_string(w) + "_" + std::to_string(k);
                    double earliness = earliness_mu + rng.normal(0.0, 21600.0);
                    earliness = std::clamp(earliness, 600.0,
                                           static_cast<double>(deadline - wstart - 3600));
                    int attempts = 1 + static_cast<int>(rng.below(3));
                    bool solved = rng.bernoulli(skill);
                    for (int a = 0; a < attempts; ++a) {
                        Timestamp ts = deadline - static_cast<std::int64_t>(earliness) +
                                       static_cast<std::int64_t>(a) * 600;
                        nlohmann::json j = base_event(id, "problem_check", ts);
                        j["problem_id"] = pid;
                        j["correct"] = solved && a + 1 == attempts;
                        lines.push_back({ts, order++, j.dump()});
                    }
                    stopout = w;
                }
                for (int k = 0; k < 2; ++k) {
                    if (!rng.bernoulli(0.7)) continue;
                    std::string pid = "lab" + std::to_string(w) + "_" + std::to_string(k);
                    double earliness = std::clamp(earliness_mu + rng.normal(0.0, 21600.0), 600.0,
                                                  static_cast<double>(deadline - wstart - 3600));
                    Timestamp ts = deadline - static_cast<std::int64_t>(earliness);
                    nlohmann::json j = base_event(id, "problem_check", ts);
                    j["problem_id"] = pid;
                    j["correct"] = rng.bernoulli(skill);
                    lines.push_back({ts, order++, j.dump()});
                    stopout = w;
                }
            }

            if (forum_user) {
                int n = rng.poisson(0.8);
                for (int k = 0; k < n; ++k) {
                    Timestamp ts = wstart + static_cast<std::int64_t>(rng.below(week_len));
                    nlohmann::json j =
                        base_event(id, rng.bernoulli(0.5) ? "forum_post" : "forum_reply", ts);
                    double len = std::max(1.0, post_len_mu + rng.normal(0.0, 40.0));
                    j["content_chars"] = static_cast<std::int64_t>(len);
                    lines.push_back({ts, order++, j.dump()});
                }
            }
            if (wiki_user) {
                int n = rng.poisson(0.4);
                for (int k = 0; k < n; ++k) {
                    Timestamp ts = wstart + static_cast<std::int64_t>(rng.below(week_len));
                    nlohmann::json j = base_event(id, "wiki_edit", ts);
                    j["content_chars"] = static_cast<std::int64_t>(rng.below(300));
                    lines.push_back({ts, order++, j.dump()});
                }
            }

            // weekly dropout hazard through a logistic link
            double logit = base_logit;
            for (std::size_t e = 0; e < cfg.planted_effects.size(); ++e)
                logit -= cfg.planted_effects[e].direction * cfg.planted_effects[e].strength *
                         traits[e];
            if (rng.bernoulli(sigmoid(logit))) break;
        }
        if (auditor) stopout = 0;
        truth += id + "," + archetype + "," + std::to_string(stopout) + "\n";
    }

    std::stable_sort(lines.begin(), lines.end(), [](const TimedLine& a, const TimedLine& b) {
        return a.ts != b.ts ? a.ts < b.ts : a.order < b.order;
    });
    std::string events;
    for (const auto& l : lines) events += l.text + "\n";
    write_file_atomic(out_dir / "events.ndjson", events);
    write_file_atomic(out_dir / "ground_truth.csv", truth);
}

// Fixed tiny corpora emitted as store directories.
// Known names: "fig2", "empty", "two_learners_tiny".
inline void emit_fixture(const std::string& name, const std::filesystem::path& out_dir) {
    EventStore store;
    auto ts = [](const char* s) {
        auto t = parse_rfc3339(s);
        if (!t) throw DataError(std::string("fixture: bad timestamp ") + s);
        return *t;
    };

    if (name == "fig2") {
        // One learner's two-hour timeline: video plays and pauses on two
        // lecture pages, then three problem attempts. The trailing grading
        // echo of the raw log carries no submission of its own.
        store.calendar.num_weeks = 15;
        for (int w = 0; w <= 15; ++w)
            store.calendar.week_starts.push_back(ts("2013-11-04T00:00:00Z") +
                                                 static_cast<std::int64_t>(w) * 7 * seconds_per_day);
        for (const char* pid : {"284", "121", "123"})
            store.calendar.problems.push_back(
                Problem{pid, 1, ts("2013-11-10T23:00:00Z"), ProblemKind::homework});
        store.calendar.validate();

        const char* id = "u1";
        struct Row { const char* t; const char* rid; };
        const Row obs[] = {
            {"2013-11-10T08:46:21Z", "191"}, {"2013-11-10T08:46:49Z", "191"},
            {"2013-11-10T08:47:24Z", "191"}, {"2013-11-10T08:51:25Z", "191"},
            {"2013-11-10T08:51:48Z", "191"}, {"2013-11-10T08:53:08Z", "198"},
            {"2013-11-10T08:55:05Z", "284"}, {"2013-11-10T08:56:05Z", "284"},
            {"2013-11-10T09:40:50Z", "284"}, {"2013-11-10T09:41:13Z", "284"},
            {"2013-11-10T09:41:57Z", "284"}, {"2013-11-10T09:53:37Z", "284"}};
        std::uint64_t seq = 0;
        for (const auto& r : obs) {
            ResourceKind kind = std::string(r.rid) == "198" ? ResourceKind::other
                                                            : ResourceKind::lecture;
            store.observed.push_back({id, r.rid, kind, ts(r.t), std::nullopt, seq++});
        }
        store.submissions.push_back({id, "284", ts("2013-11-10T10:15:53Z"), false,
                                     SubmissionKind::check, seq++});
        store.submissions.push_back({id, "121", ts("2013-11-10T10:20:27Z"), false,
                                     SubmissionKind::check, seq++});
        store.submissions.push_back({id, "123", ts("2013-11-10T10:22:27Z"), true,
                                     SubmissionKind::check, seq++});
    } else if (name == "empty") {
        store.calendar.num_weeks = 15;
        for (int w = 0; w <= 15; ++w)
            store.calendar.week_starts.push_back(ts("2013-11-04T00:00:00Z") +
                                                 static_cast<std::int64_t>(w) * 7 * seconds_per_day);
        store.calendar.validate();
    } else if (name == "two_learners_tiny") {
        // Manifest: 3 observed, 4 submissions, 3 collaborations; alice is a
        // forum contributor who stops out in week 1, bob fully collaborative
        // through week 2.
        store.calendar.num_weeks = 2;
        for (int w = 0; w <= 2; ++w)
            store.calendar.week_starts.push_back(ts("2013-01-07T00:00:00Z") +
                                                 static_cast<std::int64_t>(w) * 7 * seconds_per_day);
        store.calendar.problems.push_back(
            Problem{"p1", 1, ts("2013-01-13T20:00:00Z"), ProblemKind::homework});
        store.calendar.problems.push_back(
            Problem{"p2", 2, ts("2013-01-20T20:00:00Z"), ProblemKind::lab});
        store.calendar.validate();

        std::uint64_t seq = 0;
        store.observed.push_back({"alice", "lec1", ResourceKind::lecture,
                                  ts("2013-01-08T10:00:00Z"), std::nullopt, seq++});
        store.observed.push_back({"bob", "book1", ResourceKind::book,
                                  ts("2013-01-08T11:00:00Z"), std::nullopt, seq++});
        store.observed.push_back({"bob", "lec1", ResourceKind::lecture,
                                  ts("2013-01-15T09:30:00Z"), std::nullopt, seq++});
        store.submissions.push_back({"alice", "p1", ts("2013-01-12T10:00:00Z"), true,
                                     SubmissionKind::check, seq++});
        store.submissions.push_back({"bob", "p1", ts("2013-01-13T10:00:00Z"), false,
                                     SubmissionKind::check, seq++});
        store.submissions.push_back({"bob", "p1", ts("2013-01-13T10:05:00Z"), true,
                                     SubmissionKind::check, seq++});
        store.submissions.push_back({"bob", "p2", ts("2013-01-19T10:00:00Z"), true,
                                     SubmissionKind::check, seq++});
        store.collaborations.push_back({"alice", ts("2013-01-09T12:00:00Z"),
                                        CollabKind::forum_post, 42, seq++});
        store.collaborations.push_back({"bob", ts("2013-01-10T12:00:00Z"),
                                        CollabKind::forum_reply, 17, seq++});
        store.collaborations.push_back({"bob", ts("2013-01-16T12:00:00Z"),
                                        CollabKind::wiki_edit, 0, seq++});
    } else {
        throw DataError("unknown fixture: " + name);
    }
    store.finalize();
    save_store(store, out_dir);
}

}  // namespace stopout
