#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "stopout/csv.hpp"
#include "stopout/model.hpp"

namespace stopout {

// The 27 covariates. x1 (stopout) is the label and never a covariate.
constexpr int num_features = 27;

enum Feat : int {
    fx2 = 0, fx3, fx4, fx5, fx6, fx7, fx8, fx9, fx10, fx11, fx12, fx13, fx14,
    fx15, fx16, fx17, fx18,
    fx201, fx202, fx203, fx204, fx205, fx206, fx207, fx208, fx209, fx210
};

inline const std::array<std::string, num_features>& feature_names() {
    static const std::array<std::string, num_features> names = {
        "x2",   "x3",   "x4",   "x5",   "x6",   "x7",   "x8",   "x9",   "x10",
        "x11",  "x12",  "x13",  "x14",  "x15",  "x16",  "x17",  "x18",  "x201",
        "x202", "x203", "x204", "x205", "x206", "x207", "x208", "x209", "x210"};
    return names;
}

inline int feature_index(const std::string& name) {
    const auto& names = feature_names();
    for (int i = 0; i < num_features; ++i)
        if (names[i] == name) return i;
    return -1;
}

enum class Cohort { passive_collaborator, forum_contributor, wiki_contributor, fully_collaborative };

constexpr std::array<Cohort, 4> all_cohorts = {
    Cohort::passive_collaborator, Cohort::forum_contributor, Cohort::wiki_contributor,
    Cohort::fully_collaborative};

inline const char* to_string(Cohort c) {
    switch (c) {
        case Cohort::passive_collaborator: return "passive_collaborator";
        case Cohort::forum_contributor: return "forum_contributor";
        case Cohort::wiki_contributor: return "wiki_contributor";
        case Cohort::fully_collaborative: return "fully_collaborative";
    }
    return "passive_collaborator";
}

inline std::optional<Cohort> parse_cohort(const std::string& s) {
    for (Cohort c : all_cohorts)
        if (s == to_string(c)) return c;
    return std::nullopt;
}

using CohortMap = std::map<std::string, Cohort>;

// One row per (learner, week) for every learner in the store and every
// course week. Column 0 is x1; the 27 covariates follow in canonical order.
struct FeatureMatrix {
    std::vector<std::string> learners;  // sorted
    int num_weeks = 0;
    std::vector<double> x1;                          // learners.size() * num_weeks
    std::vector<std::array<double, num_features>> values;

    std::size_t row(std::size_t learner_idx, int week) const {
        return learner_idx * static_cast<std::size_t>(num_weeks) + (week - 1);
    }
    int learner_index(const std::string& id) const {
        auto it = std::lower_bound(learners.begin(), learners.end(), id);
        if (it == learners.end() || *it != id) return -1;
        return static_cast<int>(it - learners.begin());
    }
    double value(std::size_t learner_idx, int week, int feat) const {
        return values[row(learner_idx, week)][feat];
    }
};

struct FeaturizeOptions {
    bool x5_posts_only = false;  // restrict x5 to forum posts, excluding replies
};

struct FeaturizeReport {
    std::uint64_t unknown_problem_submissions = 0;  // x210 inputs with no deadline
    std::vector<int> weeks_without_homework;
    std::vector<int> weeks_without_lab;
};

// ---- per-operation building blocks (unit-tested individually) ----

// Sets duration_i = min(T_{i+1} - T_i, MAX_DURATION); the final event gets
// MAX_DURATION since it has no successor. Input must be time-sorted.
inline void infer_durations(std::vector<ObservedEvent>& events) {
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (i + 1 < events.size()) {
            std::int64_t gap = events[i + 1].timestamp - events[i].timestamp;
            events[i].duration_s = gap < max_duration_s ? gap : max_duration_s;
        } else {
            events[i].duration_s = max_duration_s;
        }
    }
}

// Largest week containing any submission of the learner; 0 if none.
inline int stopout_week(const std::vector<SubmissionEvent>& submissions,
                        const CourseCalendar& cal) {
    int last = 0;
    for (const auto& s : submissions)
        if (auto w = cal.week_of(s.timestamp); w && *w > last) last = *w;
    return last;
}

inline double feature_x1(int stopout, int week) { return stopout >= week ? 1.0 : 0.0; }

inline Cohort assign_cohort(const std::vector<CollaborationEvent>& collaborations) {
    bool forum_active = false, wiki_active = false;
    for (const auto& c : collaborations) {
        if (c.kind == CollabKind::wiki_edit)
            wiki_active = true;
        else
            forum_active = true;
    }
    if (forum_active && wiki_active) return Cohort::fully_collaborative;
    if (forum_active) return Cohort::forum_contributor;
    if (wiki_active) return Cohort::wiki_contributor;
    return Cohort::passive_collaborator;
}

inline CohortMap assign_cohorts(const EventStore& store) {
    std::map<std::string, std::vector<CollaborationEvent>> by_learner;
    for (const auto& c : store.collaborations) by_learner[c.learner].push_back(c);
    CohortMap out;
    for (const auto& id : store.learners) {
        auto it = by_learner.find(id);
        out[id] = assign_cohort(it == by_learner.end() ? std::vector<CollaborationEvent>{}
                                                       : it->second);
    }
    return out;
}

namespace detail {

struct WeekBuckets {
    std::vector<std::vector<ObservedEvent>> observed;      // [week-1]
    std::vector<std::vector<SubmissionEvent>> submissions;
    std::vector<std::vector<CollaborationEvent>> collaborations;
};

inline WeekBuckets bucket_by_week(const LearnerEvents& ev, const CourseCalendar& cal) {
    WeekBuckets b;
    b.observed.resize(cal.num_weeks);
    b.submissions.resize(cal.num_weeks);
    b.collaborations.resize(cal.num_weeks);
    for (const auto& e : ev.observed)
        if (auto w = cal.week_of(e.timestamp)) b.observed[*w - 1].push_back(e);
    for (const auto& e : ev.submissions)
        if (auto w = cal.week_of(e.timestamp)) b.submissions[*w - 1].push_back(e);
    for (const auto& e : ev.collaborations)
        if (auto w = cal.week_of(e.timestamp)) b.collaborations[*w - 1].push_back(e);
    return b;
}

// Population variance of seconds-after-midnight, two-pass; 0 for < 2 events.
inline double observed_time_variance(const std::vector<ObservedEvent>& events) {
    if (events.size() < 2) return 0.0;
    double sum = 0.0;
    for (const auto& e : events) sum += static_cast<double>(seconds_after_midnight(e.timestamp));
    double mean = sum / static_cast<double>(events.size());
    double ss = 0.0;
    for (const auto& e : events) {
        double d = static_cast<double>(seconds_after_midnight(e.timestamp)) - mean;
        ss += d * d;
    }
    return ss / static_cast<double>(events.size());
}

}  // namespace detail

// Computes the full per-learner per-week matrix: x2..x18 and x201..x210 plus
// the x1 label. Values are canonically rounded to 9 significant digits so the
// in-memory matrix equals its CSV round-trip.
inline FeatureMatrix extract_all(const EventStore& store,
                                 const FeaturizeOptions& options = {},
                                 FeaturizeReport* report = nullptr) {
    const CourseCalendar& cal = store.calendar;
    const int W = cal.num_weeks;
    FeatureMatrix m;
    m.learners = store.learners;
    m.num_weeks = W;
    m.x1.assign(m.learners.size() * W, 0.0);
    m.values.assign(m.learners.size() * W, {});

    // per-week assigned problem counts
    std::vector<int> hw_count(W + 1, 0), lab_count(W + 1, 0);
    for (const auto& p : cal.problems) {
        if (p.kind == ProblemKind::homework) ++hw_count[p.assigned_week];
        if (p.kind == ProblemKind::lab) ++lab_count[p.assigned_week];
    }
    if (report) {
        for (int w = 1; w <= W; ++w) {
            if (hw_count[w] == 0) report->weeks_without_homework.push_back(w);
            if (lab_count[w] == 0) report->weeks_without_lab.push_back(w);
        }
    }

    // group events per learner, preserving the store's canonical order
    std::map<std::string, LearnerEvents> grouped;
    for (const auto& id : m.learners) grouped[id];
    for (const auto& e : store.observed) grouped[e.learner].observed.push_back(e);
    for (const auto& e : store.submissions) grouped[e.learner].submissions.push_back(e);
    for (const auto& e : store.collaborations) grouped[e.learner].collaborations.push_back(e);

    for (std::size_t li = 0; li < m.learners.size(); ++li) {
        LearnerEvents& ev = grouped[m.learners[li]];
        infer_durations(ev.observed);
        detail::WeekBuckets buckets = detail::bucket_by_week(ev, cal);
        const int stopout = stopout_week(ev.submissions, cal);

        // problems answered correctly at any time during the course
        std::set<std::string> correct_ever;
        for (const auto& s : ev.submissions)
            if (s.is_correct) correct_ever.insert(s.problem_id);

        std::vector<double> pset_grades(W + 1, 0.0), lab_grades(W + 1, 0.0);
        for (int w = 1; w <= W; ++w) {
            int hw_correct = 0, lab_correct = 0;
            for (const auto& p : cal.problems) {
                if (p.assigned_week != w || !correct_ever.count(p.problem_id)) continue;
                if (p.kind == ProblemKind::homework) ++hw_correct;
                if (p.kind == ProblemKind::lab) ++lab_correct;
            }
            pset_grades[w] = hw_count[w] > 0 ? static_cast<double>(hw_correct) / hw_count[w] : 0.0;
            lab_grades[w] = lab_count[w] > 0 ? static_cast<double>(lab_correct) / lab_count[w] : 0.0;
        }

        for (int w = 1; w <= W; ++w) {
            auto& x = m.values[m.row(li, w)];
            m.x1[m.row(li, w)] = feature_x1(stopout, w);

            const auto& obs = buckets.observed[w - 1];
            const auto& subs = buckets.submissions[w - 1];
            const auto& collabs = buckets.collaborations[w - 1];

            // durations
            double total = 0.0, longest = 0.0, lecture = 0.0, book = 0.0, wiki = 0.0;
            for (const auto& e : obs) {
                double d = static_cast<double>(*e.duration_s);
                total += d;
                if (d > longest) longest = d;
                if (e.kind == ResourceKind::lecture) lecture += d;
                if (e.kind == ResourceKind::book) book += d;
                if (e.kind == ResourceKind::wiki) wiki += d;
            }
            x[fx2] = total;
            x[fx15] = longest;
            x[fx16] = lecture;
            x[fx17] = book;
            x[fx18] = wiki;

            // collaborations
            double posts = 0, replies = 0, edits = 0, chars = 0, chars_n = 0;
            for (const auto& c : collabs) {
                bool counts_for_x5 = false;
                switch (c.kind) {
                    case CollabKind::forum_post:
                        ++posts;
                        counts_for_x5 = true;
                        break;
                    case CollabKind::forum_reply:
                        ++replies;
                        counts_for_x5 = !options.x5_posts_only;
                        break;
                    case CollabKind::wiki_edit:
                        ++edits;
                        break;
                }
                if (counts_for_x5) {
                    chars += static_cast<double>(c.content_chars);
                    ++chars_n;
                }
            }
            x[fx3] = posts;
            x[fx201] = replies;
            x[fx4] = edits;
            x[fx5] = chars_n > 0 ? chars / chars_n : 0.0;
            x[fx14] = posts + edits;

            // submissions, bucketed by submission timestamp
            std::set<std::string> distinct, distinct_correct;
            double correct_count = 0;
            std::map<std::string, std::pair<Timestamp, Timestamp>> spans;
            for (const auto& s : subs) {
                distinct.insert(s.problem_id);
                if (s.is_correct) {
                    distinct_correct.insert(s.problem_id);
                    ++correct_count;
                }
                auto [it, fresh] = spans.emplace(s.problem_id,
                                                 std::make_pair(s.timestamp, s.timestamp));
                if (!fresh) {
                    it->second.first = std::min(it->second.first, s.timestamp);
                    it->second.second = std::max(it->second.second, s.timestamp);
                }
            }
            x[fx7] = static_cast<double>(subs.size());
            x[fx6] = static_cast<double>(distinct.size());
            x[fx8] = static_cast<double>(distinct_correct.size());
            x[fx208] = correct_count;
            x[fx209] = x[fx7] > 0 ? x[fx208] / x[fx7] : 0.0;

            // ratios; zero-denominator convention is 0
            x[fx9] = x[fx6] > 0 ? x[fx7] / x[fx6] : 0.0;
            x[fx10] = x[fx8] > 0 ? x[fx2] / x[fx8] : 0.0;
            x[fx11] = x[fx8] > 0 ? x[fx6] / x[fx8] : 0.0;
            double span_sum = 0.0;
            for (const auto& [id, span] : spans)
                span_sum += static_cast<double>(span.second - span.first);
            x[fx12] = spans.empty() ? 0.0 : span_sum / static_cast<double>(spans.size());

            x[fx13] = detail::observed_time_variance(obs);

            // grades, keyed to the week's assigned problems
            x[fx204] = pset_grades[w];
            x[fx206] = lab_grades[w];
            if (w == 1) {
                x[fx205] = 0.0;
                x[fx207] = 0.0;
            } else {
                double hw_past = 0.0, lab_past = 0.0;
                for (int v = 1; v < w; ++v) {
                    hw_past += pset_grades[v];
                    lab_past += lab_grades[v];
                }
                x[fx205] = pset_grades[w] - hw_past / (w - 1);
                x[fx207] = lab_grades[w] - lab_past / (w - 1);
            }

            // mean pre-deadline margin; late submissions contribute negatives
            double margin_sum = 0.0, margin_n = 0.0;
            for (const auto& s : subs) {
                const Problem* p = cal.find_problem(s.problem_id);
                if (!p) {
                    if (report) ++report->unknown_problem_submissions;
                    continue;
                }
                margin_sum += static_cast<double>(p->deadline - s.timestamp);
                ++margin_n;
            }
            x[fx210] = margin_n > 0 ? margin_sum / margin_n : 0.0;
        }
    }

    // global per-week pass: x9 percentile and percent-of-max
    for (int w = 1; w <= W; ++w) {
        std::vector<double> d;
        d.reserve(m.learners.size());
        for (std::size_t li = 0; li < m.learners.size(); ++li)
            d.push_back(m.values[m.row(li, w)][fx9]);
        double dmax = 0.0;
        for (double v : d) dmax = std::max(dmax, v);
        for (std::size_t li = 0; li < m.learners.size(); ++li) {
            auto& x = m.values[m.row(li, w)];
            if (d.empty()) continue;
            std::size_t le = 0;
            for (double v : d)
                if (v <= x[fx9]) ++le;
            x[fx202] = 100.0 * static_cast<double>(le) / static_cast<double>(d.size());
            x[fx203] = dmax > 0 ? 100.0 * x[fx9] / dmax : 0.0;
        }
    }

    for (auto& row : m.values)
        for (double& v : row) v = round_sig9(v);
    return m;
}

// ---- CSV interfaces ----

inline void write_features_csv(const FeatureMatrix& m, const std::filesystem::path& path) {
    std::string out = "learner_id,week";
    out += ",x1";
    for (const auto& n : feature_names()) out += "," + n;
    out += "\n";
    for (std::size_t li = 0; li < m.learners.size(); ++li) {
        for (int w = 1; w <= m.num_weeks; ++w) {
            std::size_t r = m.row(li, w);
            out += m.learners[li] + "," + std::to_string(w);
            out += "," + format_sig9(m.x1[r]);
            for (double v : m.values[r]) out += "," + format_sig9(v);
            out += "\n";
        }
    }
    write_file_atomic(path, out);
}

inline FeatureMatrix read_features_csv(const std::filesystem::path& path) {
    auto lines = read_lines(path);
    if (lines.empty()) throw DataError("empty features file " + path.string());
    auto header = split_csv_line(lines[0]);
    if (header.size() != static_cast<std::size_t>(num_features) + 3)
        throw DataError("features csv: unexpected column count in " + path.string());

    std::map<std::string, std::map<int, std::pair<double, std::array<double, num_features>>>> rows;
    int max_week = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto f = split_csv_line(lines[i]);
        if (f.size() != header.size())
            throw DataError("features csv: bad row " + std::to_string(i + 1));
        int week = std::stoi(f[1]);
        max_week = std::max(max_week, week);
        auto& cell = rows[f[0]][week];
        cell.first = std::strtod(f[2].c_str(), nullptr);
        for (int k = 0; k < num_features; ++k)
            cell.second[k] = std::strtod(f[3 + k].c_str(), nullptr);
    }

    FeatureMatrix m;
    m.num_weeks = max_week;
    for (const auto& [id, _] : rows) m.learners.push_back(id);
    m.x1.assign(m.learners.size() * max_week, 0.0);
    m.values.assign(m.learners.size() * max_week, {});
    for (std::size_t li = 0; li < m.learners.size(); ++li) {
        const auto& weeks = rows[m.learners[li]];
        if (static_cast<int>(weeks.size()) != max_week)
            throw DataError("features csv: learner " + m.learners[li] + " is missing weeks");
        for (const auto& [w, cell] : weeks) {
            m.x1[m.row(li, w)] = cell.first;
            m.values[m.row(li, w)] = cell.second;
        }
    }
    return m;
}

inline void write_cohorts_csv(const CohortMap& cohorts, const std::filesystem::path& path) {
    std::string out = "learner_id,cohort\n";
    for (const auto& [id, c] : cohorts) out += id + "," + to_string(c) + "\n";
    write_file_atomic(path, out);
}

inline CohortMap read_cohorts_csv(const std::filesystem::path& path) {
    auto lines = read_lines(path);
    CohortMap out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto f = split_csv_line(lines[i]);
        if (f.size() != 2) throw DataError("cohorts csv: bad row " + std::to_string(i + 1));
        auto c = parse_cohort(f[1]);
        if (!c) throw DataError("cohorts csv: unknown cohort " + f[1]);
        out[f[0]] = *c;
    }
    return out;
}

}  // namespace stopout
