#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stopout/time.hpp"

namespace stopout {

// Fatal data-level problem (bad calendar, unreadable store, ...). The CLI
// maps this to exit code 2.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Inferred observed-event durations are capped at 60 minutes.
constexpr std::int64_t max_duration_s = 3600;

enum class ResourceKind { lecture, book, wiki, forum, problem, other };

inline const char* to_string(ResourceKind k) {
    switch (k) {
        case ResourceKind::lecture: return "lecture";
        case ResourceKind::book: return "book";
        case ResourceKind::wiki: return "wiki";
        case ResourceKind::forum: return "forum";
        case ResourceKind::problem: return "problem";
        case ResourceKind::other: return "other";
    }
    return "other";
}

inline std::optional<ResourceKind> parse_resource_kind(const std::string& s) {
    if (s == "lecture") return ResourceKind::lecture;
    if (s == "book") return ResourceKind::book;
    if (s == "wiki") return ResourceKind::wiki;
    if (s == "forum") return ResourceKind::forum;
    if (s == "problem") return ResourceKind::problem;
    if (s == "other") return ResourceKind::other;
    return std::nullopt;
}

enum class SubmissionKind { check, save };
enum class CollabKind { forum_post, forum_reply, wiki_edit };

inline const char* to_string(CollabKind k) {
    switch (k) {
        case CollabKind::forum_post: return "forum_post";
        case CollabKind::forum_reply: return "forum_reply";
        case CollabKind::wiki_edit: return "wiki_edit";
    }
    return "forum_post";
}

struct ObservedEvent {
    std::string learner;
    std::string resource_id;
    ResourceKind kind = ResourceKind::other;
    Timestamp timestamp = 0;
    std::optional<std::int64_t> duration_s;  // absent until inferred
    std::uint64_t seq = 0;                   // stable input order for tie-breaks

    friend bool operator==(const ObservedEvent& a, const ObservedEvent& b) {
        return a.learner == b.learner && a.resource_id == b.resource_id && a.kind == b.kind &&
               a.timestamp == b.timestamp;
    }
};

struct SubmissionEvent {
    std::string learner;
    std::string problem_id;
    Timestamp timestamp = 0;
    bool is_correct = false;
    SubmissionKind kind = SubmissionKind::check;
    std::uint64_t seq = 0;

    friend bool operator==(const SubmissionEvent& a, const SubmissionEvent& b) {
        return a.learner == b.learner && a.problem_id == b.problem_id &&
               a.timestamp == b.timestamp && a.is_correct == b.is_correct && a.kind == b.kind;
    }
};

struct CollaborationEvent {
    std::string learner;
    Timestamp timestamp = 0;
    CollabKind kind = CollabKind::forum_post;
    std::int64_t content_chars = 0;  // Unicode scalar values of the body
    std::uint64_t seq = 0;

    friend bool operator==(const CollaborationEvent& a, const CollaborationEvent& b) {
        return a.learner == b.learner && a.timestamp == b.timestamp && a.kind == b.kind &&
               a.content_chars == b.content_chars;
    }
};

enum class ProblemKind { homework, lab, other };

inline const char* to_string(ProblemKind k) {
    switch (k) {
        case ProblemKind::homework: return "homework";
        case ProblemKind::lab: return "lab";
        case ProblemKind::other: return "other";
    }
    return "other";
}

struct Problem {
    std::string problem_id;
    int assigned_week = 1;
    Timestamp deadline = 0;
    ProblemKind kind = ProblemKind::other;

    friend bool operator==(const Problem&, const Problem&) = default;
};

// Course weeks as half-open intervals [week_starts[w-1], week_starts[w]),
// w in [1, num_weeks]. week_starts has num_weeks + 1 entries; the last one
// closes the final week.
struct CourseCalendar {
    int num_weeks = 15;
    std::vector<Timestamp> week_starts;
    std::vector<Problem> problems;

    // Returns the 1-based week index, or nullopt for out-of-range timestamps.
    std::optional<int> week_of(Timestamp t) const {
        if (week_starts.empty() || t < week_starts.front() || t >= week_starts.back())
            return std::nullopt;
        auto it = std::upper_bound(week_starts.begin(), week_starts.end(), t);
        return static_cast<int>(it - week_starts.begin());
    }

    const Problem* find_problem(const std::string& id) const {
        auto it = problem_index_.find(id);
        return it == problem_index_.end() ? nullptr : &problems[it->second];
    }

    // Checks structural invariants and builds the problem lookup.
    void validate() {
        if (num_weeks < 1) throw DataError("calendar: num_weeks must be >= 1");
        if (week_starts.size() != static_cast<std::size_t>(num_weeks) + 1)
            throw DataError("calendar: expected num_weeks + 1 week_starts");
        for (std::size_t i = 1; i < week_starts.size(); ++i)
            if (week_starts[i] <= week_starts[i - 1])
                throw DataError("calendar: week_starts must be strictly increasing");
        problem_index_.clear();
        for (std::size_t i = 0; i < problems.size(); ++i) {
            const Problem& p = problems[i];
            if (p.assigned_week < 1 || p.assigned_week > num_weeks)
                throw DataError("calendar: problem " + p.problem_id + " has out-of-range week");
            if (p.deadline < week_starts[p.assigned_week - 1])
                throw DataError("calendar: problem " + p.problem_id +
                                " deadline precedes its assigned week");
            if (!problem_index_.emplace(p.problem_id, i).second)
                throw DataError("calendar: duplicate problem " + p.problem_id);
        }
    }

    friend bool operator==(const CourseCalendar& a, const CourseCalendar& b) {
        return a.num_weeks == b.num_weeks && a.week_starts == b.week_starts &&
               a.problems == b.problems;
    }

private:
    std::map<std::string, std::size_t> problem_index_;
};

// Per-learner event sequences, each in nondecreasing timestamp order with
// input order as the tie-break.
struct LearnerEvents {
    std::vector<ObservedEvent> observed;
    std::vector<SubmissionEvent> submissions;
    std::vector<CollaborationEvent> collaborations;
};

// Immutable after finalize(); any number of concurrent readers afterwards.
struct EventStore {
    std::vector<ObservedEvent> observed;
    std::vector<SubmissionEvent> submissions;
    std::vector<CollaborationEvent> collaborations;
    CourseCalendar calendar;
    std::vector<std::string> learners;  // sorted, unique

    // Sorts each event table by (timestamp, seq) and rebuilds the learner set.
    void finalize() {
        auto by_time = [](const auto& a, const auto& b) {
            return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.seq < b.seq;
        };
        std::sort(observed.begin(), observed.end(), by_time);
        std::sort(submissions.begin(), submissions.end(), by_time);
        std::sort(collaborations.begin(), collaborations.end(), by_time);
        learners.clear();
        for (const auto& e : observed) learners.push_back(e.learner);
        for (const auto& e : submissions) learners.push_back(e.learner);
        for (const auto& e : collaborations) learners.push_back(e.learner);
        std::sort(learners.begin(), learners.end());
        learners.erase(std::unique(learners.begin(), learners.end()), learners.end());
    }

    LearnerEvents learner_events(const std::string& learner) const {
        LearnerEvents out;
        for (const auto& e : observed)
            if (e.learner == learner) out.observed.push_back(e);
        for (const auto& e : submissions)
            if (e.learner == learner) out.submissions.push_back(e);
        for (const auto& e : collaborations)
            if (e.learner == learner) out.collaborations.push_back(e);
        return out;
    }

    friend bool operator==(const EventStore& a, const EventStore& b) {
        return a.observed == b.observed && a.submissions == b.submissions &&
               a.collaborations == b.collaborations && a.calendar == b.calendar;
    }
};

}  // namespace stopout
