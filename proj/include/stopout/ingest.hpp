#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "stopout/csv.hpp"
#include "stopout/model.hpp"
#include "stopout/time.hpp"

namespace stopout {

struct CurationReport {
    std::uint64_t total = 0;
    std::uint64_t accepted = 0;
    std::uint64_t rejected = 0;
    std::uint64_t out_of_range = 0;    // accepted but outside course weeks, dropped
    std::uint64_t graded_ignored = 0;  // grading echoes, accepted but not stored
    std::map<std::string, std::uint64_t> rejects_by_reason;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["total"] = total;
        j["accepted"] = accepted;
        j["rejected"] = rejected;
        j["out_of_range"] = out_of_range;
        j["graded_ignored"] = graded_ignored;
        j["rejects_by_reason"] = rejects_by_reason;
        return j;
    }
};

struct ParsedEvent {
    enum class Kind { observed, submission, collaboration, graded, rejected };
    Kind kind = Kind::rejected;
    ObservedEvent obs;
    SubmissionEvent sub;
    CollaborationEvent collab;
    std::string reject_reason;

    static ParsedEvent reject(std::string reason) {
        ParsedEvent e;
        e.kind = Kind::rejected;
        e.reject_reason = std::move(reason);
        return e;
    }
};

namespace detail {

inline std::int64_t utf8_scalar_count(const std::string& s) {
    std::int64_t n = 0;
    for (unsigned char c : s)
        if ((c & 0xC0) != 0x80) ++n;
    return n;
}

inline bool is_observed_type(const std::string& t) {
    static const char* kinds[] = {"play_video", "pause_video", "stop_video", "seq_goto",
                                  "seq_next",   "seq_prev",    "page_view",  "page_close",
                                  "book_view",  "forum_view",  "wiki_view"};
    for (const char* k : kinds)
        if (t == k) return true;
    return false;
}

}  // namespace detail

// Turns one raw log line into a typed event or a curation rejection.
// Rejections are values; parsing never throws on bad input.
inline ParsedEvent parse_log_line(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return ParsedEvent::reject("malformed_json");

    auto str = [&](const char* key) -> const std::string* {
        auto it = j.find(key);
        if (it == j.end() || !it->is_string()) return nullptr;
        return it->get_ptr<const std::string*>();
    };

    const std::string* learner = str("learner_id");
    const std::string* type = str("event_type");
    const std::string* ts_text = str("timestamp");
    if (!learner || !type || !ts_text) return ParsedEvent::reject("missing_field");
    if (learner->empty()) return ParsedEvent::reject("bad_field");
    auto ts = parse_rfc3339(*ts_text);
    if (!ts || *ts < 0) return ParsedEvent::reject("bad_timestamp");

    ParsedEvent out;
    if (detail::is_observed_type(*type)) {
        const std::string* rid = str("resource_id");
        const std::string* rkind = str("resource_kind");
        if (!rid || !rkind) return ParsedEvent::reject("missing_field");
        auto kind = parse_resource_kind(*rkind);
        if (!kind) return ParsedEvent::reject("bad_field");
        out.kind = ParsedEvent::Kind::observed;
        out.obs = ObservedEvent{*learner, *rid, *kind, *ts, std::nullopt, 0};
        return out;
    }
    if (*type == "problem_check" || *type == "problem_save") {
        const std::string* pid = str("problem_id");
        auto correct = j.find("correct");
        if (!pid || correct == j.end()) return ParsedEvent::reject("missing_field");
        if (!correct->is_boolean()) return ParsedEvent::reject("bad_field");
        out.kind = ParsedEvent::Kind::submission;
        out.sub = SubmissionEvent{*learner, *pid, *ts, correct->get<bool>(),
                                  *type == "problem_save" ? SubmissionKind::save
                                                          : SubmissionKind::check,
                                  0};
        return out;
    }
    if (*type == "forum_post" || *type == "forum_reply" || *type == "wiki_edit") {
        CollabKind kind = *type == "forum_post"    ? CollabKind::forum_post
                          : *type == "forum_reply" ? CollabKind::forum_reply
                                                   : CollabKind::wiki_edit;
        std::int64_t chars = 0;
        if (auto it = j.find("content_chars"); it != j.end()) {
            if (!it->is_number_integer() || it->get<std::int64_t>() < 0)
                return ParsedEvent::reject("bad_field");
            chars = it->get<std::int64_t>();
        } else if (const std::string* body = str("body")) {
            chars = detail::utf8_scalar_count(*body);
        }
        out.kind = ParsedEvent::Kind::collaboration;
        out.collab = CollaborationEvent{*learner, *ts, kind, chars, 0};
        return out;
    }
    if (*type == "problem_graded") {
        // Grading echo; correctness comes from the correct flag on checks.
        out.kind = ParsedEvent::Kind::graded;
        return out;
    }
    return ParsedEvent::reject("unknown_event_type");
}

namespace detail {

inline ProblemKind parse_problem_kind(const std::string& s, std::vector<std::string>* warnings) {
    if (s == "homework") return ProblemKind::homework;
    if (s == "lab") return ProblemKind::lab;
    if (s != "other" && warnings)
        warnings->push_back("unknown problem kind '" + s + "', treated as other");
    return ProblemKind::other;
}

inline Timestamp parse_timestamp_field(const nlohmann::json& v, const std::string& what) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_string()) {
        auto t = parse_rfc3339(v.get<std::string>());
        if (t) return *t;
    }
    throw DataError("bad timestamp in " + what);
}

}  // namespace detail

// Calendar JSON: {"num_weeks": N, "week_starts": [...], "problems": [...]}.
// week_starts and deadlines may be RFC-3339 strings or epoch seconds.
inline CourseCalendar load_calendar(const std::filesystem::path& path,
                                    std::vector<std::string>* warnings = nullptr) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open calendar " + path.string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw DataError("malformed calendar " + path.string());

    CourseCalendar cal;
    if (!j.contains("num_weeks") || !j["num_weeks"].is_number_integer())
        throw DataError("calendar: missing num_weeks");
    cal.num_weeks = j["num_weeks"].get<int>();
    if (!j.contains("week_starts") || !j["week_starts"].is_array())
        throw DataError("calendar: missing week_starts");
    for (const auto& w : j["week_starts"])
        cal.week_starts.push_back(detail::parse_timestamp_field(w, "week_starts"));
    if (j.contains("problems")) {
        for (const auto& p : j["problems"]) {
            Problem pr;
            pr.problem_id = p.at("problem_id").get<std::string>();
            pr.assigned_week = p.at("assigned_week").get<int>();
            pr.deadline = detail::parse_timestamp_field(p.at("deadline"), pr.problem_id);
            pr.kind = detail::parse_problem_kind(p.at("kind").get<std::string>(), warnings);
            cal.problems.push_back(std::move(pr));
        }
    }
    cal.validate();
    return cal;
}

inline void load_problems_csv(const std::filesystem::path& path, CourseCalendar& cal,
                              std::vector<std::string>* warnings = nullptr) {
    auto lines = read_lines(path);
    for (std::size_t i = 1; i < lines.size(); ++i) {  // skip header
        if (lines[i].empty()) continue;
        auto f = split_csv_line(lines[i]);
        if (f.size() != 4) throw DataError("problems.csv: bad row " + std::to_string(i + 1));
        Problem pr;
        pr.problem_id = f[0];
        pr.assigned_week = std::stoi(f[1]);
        auto t = parse_rfc3339(f[2]);
        if (!t) throw DataError("problems.csv: bad deadline in row " + std::to_string(i + 1));
        pr.deadline = *t;
        pr.kind = detail::parse_problem_kind(f[3], warnings);
        cal.problems.push_back(std::move(pr));
    }
    cal.validate();
}

// Parses all *.ndjson files under events_dir (sorted by filename), curates
// malformed lines, drops events outside the course weeks, and assembles an
// immutable store ordered by (timestamp, file, line).
inline std::pair<EventStore, CurationReport> ingest_directory(
    const std::filesystem::path& events_dir, const std::filesystem::path& calendar_path) {
    EventStore store;
    CurationReport report;
    store.calendar = load_calendar(calendar_path);

    std::vector<std::filesystem::path> files;
    if (!std::filesystem::is_directory(events_dir))
        throw DataError("events directory not found: " + events_dir.string());
    for (const auto& e : std::filesystem::directory_iterator(events_dir))
        if (e.is_regular_file() && e.path().extension() == ".ndjson") files.push_back(e.path());
    std::sort(files.begin(), files.end());

    std::uint64_t seq = 0;
    for (const auto& file : files) {
        std::ifstream in(file);
        if (!in) throw DataError("cannot open " + file.string());
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            ++report.total;
            ParsedEvent ev = parse_log_line(line);
            if (ev.kind == ParsedEvent::Kind::rejected) {
                ++report.rejected;
                ++report.rejects_by_reason[ev.reject_reason];
                continue;
            }
            ++report.accepted;
            if (ev.kind == ParsedEvent::Kind::graded) {
                ++report.graded_ignored;
                continue;
            }
            Timestamp ts = ev.kind == ParsedEvent::Kind::observed     ? ev.obs.timestamp
                           : ev.kind == ParsedEvent::Kind::submission ? ev.sub.timestamp
                                                                      : ev.collab.timestamp;
            if (!store.calendar.week_of(ts)) {
                ++report.out_of_range;
                continue;
            }
            switch (ev.kind) {
                case ParsedEvent::Kind::observed:
                    ev.obs.seq = seq++;
                    store.observed.push_back(std::move(ev.obs));
                    break;
                case ParsedEvent::Kind::submission:
                    ev.sub.seq = seq++;
                    store.submissions.push_back(std::move(ev.sub));
                    break;
                case ParsedEvent::Kind::collaboration:
                    ev.collab.seq = seq++;
                    store.collaborations.push_back(std::move(ev.collab));
                    break;
                default:
                    break;
            }
        }
    }
    store.finalize();
    return {std::move(store), std::move(report)};
}

namespace detail {

inline std::string observed_line(const ObservedEvent& e) {
    nlohmann::json j;
    j["learner_id"] = e.learner;
    j["event_type"] = "page_view";
    j["resource_id"] = e.resource_id;
    j["resource_kind"] = to_string(e.kind);
    j["timestamp"] = format_rfc3339(e.timestamp);
    return j.dump();
}

inline std::string submission_line(const SubmissionEvent& e) {
    nlohmann::json j;
    j["learner_id"] = e.learner;
    j["event_type"] = e.kind == SubmissionKind::save ? "problem_save" : "problem_check";
    j["problem_id"] = e.problem_id;
    j["correct"] = e.is_correct;
    j["timestamp"] = format_rfc3339(e.timestamp);
    return j.dump();
}

inline std::string collaboration_line(const CollaborationEvent& e) {
    nlohmann::json j;
    j["learner_id"] = e.learner;
    j["event_type"] = to_string(e.kind);
    j["content_chars"] = e.content_chars;
    j["timestamp"] = format_rfc3339(e.timestamp);
    return j.dump();
}

}  // namespace detail

// Store directory layout: observed_events.ndjson, submissions.ndjson,
// collaborations.ndjson, problems.csv, calendar.json.
inline void save_store(const EventStore& store, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::string out;
    for (const auto& e : store.observed) out += detail::observed_line(e) + "\n";
    write_file_atomic(dir / "observed_events.ndjson", out);
    out.clear();
    for (const auto& e : store.submissions) out += detail::submission_line(e) + "\n";
    write_file_atomic(dir / "submissions.ndjson", out);
    out.clear();
    for (const auto& e : store.collaborations) out += detail::collaboration_line(e) + "\n";
    write_file_atomic(dir / "collaborations.ndjson", out);

    out = "problem_id,assigned_week,deadline,kind\n";
    for (const auto& p : store.calendar.problems)
        out += p.problem_id + "," + std::to_string(p.assigned_week) + "," +
               format_rfc3339(p.deadline) + "," + to_string(p.kind) + "\n";
    write_file_atomic(dir / "problems.csv", out);

    nlohmann::json cal;
    cal["num_weeks"] = store.calendar.num_weeks;
    std::vector<std::string> starts;
    for (Timestamp t : store.calendar.week_starts) starts.push_back(format_rfc3339(t));
    cal["week_starts"] = starts;
    write_file_atomic(dir / "calendar.json", cal.dump(2) + "\n");
}

inline EventStore load_store(const std::filesystem::path& dir,
                             std::vector<std::string>* warnings = nullptr) {
    EventStore store;
    store.calendar = load_calendar(dir / "calendar.json", warnings);
    load_problems_csv(dir / "problems.csv", store.calendar, warnings);

    std::uint64_t seq = 0;
    auto load_events = [&](const std::filesystem::path& file) {
        if (!std::filesystem::exists(file)) throw DataError("missing store file " + file.string());
        for (const auto& line : read_lines(file)) {
            if (line.empty()) continue;
            ParsedEvent ev = parse_log_line(line);
            switch (ev.kind) {
                case ParsedEvent::Kind::observed:
                    ev.obs.seq = seq++;
                    store.observed.push_back(std::move(ev.obs));
                    break;
                case ParsedEvent::Kind::submission:
                    ev.sub.seq = seq++;
                    store.submissions.push_back(std::move(ev.sub));
                    break;
                case ParsedEvent::Kind::collaboration:
                    ev.collab.seq = seq++;
                    store.collaborations.push_back(std::move(ev.collab));
                    break;
                default:
                    throw DataError("corrupt store line in " + file.string() + ": " + line);
            }
        }
    };
    load_events(dir / "observed_events.ndjson");
    load_events(dir / "submissions.ndjson");
    load_events(dir / "collaborations.ndjson");
    store.finalize();
    return store;
}

}  // namespace stopout
