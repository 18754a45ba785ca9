#pragma once

// Grading sessions over a loaded schedule. Timing is taken from the server
// clock: a case's clock starts when its view is first served and stops on
// submit.

#include "readerbench/design.hpp"
#include "readerbench/events.hpp"
#include "readerbench/predictor.hpp"

#include <nlohmann/json_fwd.hpp>

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace rbench {

class Clock {
public:
    virtual ~Clock() = default;
    virtual double now() = 0;  // seconds
};

class SystemClock final : public Clock {
public:
    double now() override;
};

// Advances only when told to; used by tests and the simulator.
class ManualClock final : public Clock {
public:
    explicit ManualClock(double start = 0.0) : now_(start) {}
    double now() override { return now_.load(); }
    void advance(double seconds);

private:
    std::atomic<double> now_;
};

// Append-only, totally ordered event log, optionally mirrored to a JSON-lines
// file. Opening an existing file replays it; that replay is the recovery path.
class EventLog {
public:
    EventLog() = default;
    explicit EventLog(std::filesystem::path path);

    // Assigns seq and appends; the line is flushed before returning.
    GradingEvent append(GradingEvent event);
    // Copy of every event appended so far.
    std::vector<GradingEvent> snapshot() const;
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::vector<GradingEvent> events_;
    std::optional<std::filesystem::path> path_;
};

struct Session {
    std::string session_id;
    std::string clinician_id;
    int round_no = 1;
    std::size_t position = 0;
    std::size_t total = 0;
    double started_at = 0.0;
    bool active = true;
};

void to_json(nlohmann::json& j, const Session& s);

struct CaseView {
    std::string session_id;
    std::size_t position = 0;
    std::size_t total = 0;
    std::string patient_alias;
    std::string batch_id;
    std::string image_left;
    std::string image_right;
    Arm arm = Arm::Manual;
    std::optional<AiSuggestion> ai_suggestion;  // present iff arm == ManualPlusAI
};

// A Manual view serializes without any suggestion key.
void to_json(nlohmann::json& j, const CaseView& v);

// Returns the paths of keys that can only carry predictor output
// ("ai_suggestion", "prediction", "confidence", feature grades, severity).
std::vector<std::string> predictor_fields(const nlohmann::json& payload);

struct ProgressRow {
    std::string clinician_id;
    int round_no = 1;
    std::size_t submitted = 0;
    std::size_t total = 0;
    bool active_session = false;
};

struct Progress {
    std::vector<ProgressRow> rows;  // every (clinician, round) in the schedule
    std::size_t events = 0;
    std::size_t expected_events = 0;
};

void to_json(nlohmann::json& j, const Progress& p);

struct ServiceOptions {
    std::uint64_t seed = 0;  // session ids
};

class GradingService {
public:
    // `predictor` may be null; it is consulted only for patients missing
    // from `cache`.
    GradingService(Schedule schedule, std::vector<PatientRecord> cohort, SeverityRuleTable rules,
                   std::shared_ptr<const PredictionCache> cache, std::shared_ptr<Predictor> predictor, Clock& clock,
                   EventLog& log, ServiceOptions options = {});

    Session start_session(const std::string& clinician_id, int round_no);
    CaseView next_case(const std::string& session_id);
    GradingEvent submit(const std::string& session_id, const std::string& patient_alias, const PatientGrade& grades,
                        std::optional<double> client_elapsed_seconds = std::nullopt);
    // Invalidates the timing of the case in progress; it must still be submitted.
    void abandon(const std::string& session_id);

    Session session(const std::string& session_id) const;
    std::vector<GradingEvent> export_events(const EventFilter& filter = {}) const;
    Progress progress() const;

    const Schedule& schedule() const { return schedule_; }

private:
    struct Case {
        std::string alias;
        std::string batch_id;
        Arm arm;
    };
    struct SessionState {
        Session info;
        std::vector<Case> cases;
        std::optional<double> presented_at;  // case at `position` is on screen
        bool timing_invalidated = false;
        std::mutex mutex;
    };

    std::shared_ptr<SessionState> find_session(const std::string& session_id) const;
    const PatientRecord& record_for_alias(const std::string& alias) const;
    AiSuggestion suggestion_for(const PatientRecord& record, const std::string& alias);

    Schedule schedule_;
    std::map<std::string, PatientRecord> records_;
    SeverityRuleTable rules_;
    std::shared_ptr<const PredictionCache> cache_;
    std::shared_ptr<Predictor> predictor_;
    Clock& clock_;
    EventLog& log_;
    ServiceOptions options_;

    mutable std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<SessionState>> sessions_;
    std::map<std::pair<std::string, int>, std::string> by_pair_;  // active or finished
    std::uint64_t session_counter_ = 0;
};

}  // namespace rbench
