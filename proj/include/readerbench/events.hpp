#pragma once

// Grading events: the append-only record of every submitted grade.

#include "readerbench/design.hpp"
#include "readerbench/severity.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rbench {

void to_json(nlohmann::json& j, const EyeGrade& grade);
void from_json(const nlohmann::json& j, EyeGrade& grade);  // Validation error naming the field
void to_json(nlohmann::json& j, const PatientGrade& grade);
void from_json(const nlohmann::json& j, PatientGrade& grade);

struct GradingEvent {
    std::uint64_t seq = 0;  // position in the log, from 0
    std::string clinician_id;
    int round_no = 1;
    Arm arm = Arm::Manual;
    std::string batch_id;
    std::string patient_alias;
    PatientGrade submitted;
    int derived_severity = 0;
    // Server clock, seconds. Null when the case was abandoned and its timing
    // invalidated.
    std::optional<double> elapsed_seconds;
    double presented_at = 0.0;
    double submitted_at = 0.0;
    bool ai_suggestion_shown = false;
    bool timing_invalidated = false;
    std::optional<double> client_elapsed_seconds;  // audit only
};

void to_json(nlohmann::json& j, const GradingEvent& event);
void from_json(const nlohmann::json& j, GradingEvent& event);

std::string event_to_line(const GradingEvent& event);  // compact JSON, no newline
GradingEvent event_from_line(std::string_view line);

// One JSON object per line; blank lines ignored. Errors name the line number.
std::vector<GradingEvent> parse_event_log(std::string_view text);
std::vector<GradingEvent> load_event_log(const std::filesystem::path& path);
std::string format_event_log(const std::vector<GradingEvent>& events);

// Offline re-check of the stored invariants: severity recomputes, timing is
// monotone and matches elapsed_seconds, suggestion shown iff ManualPlusAI.
// Returns one message per violation.
std::vector<std::string> audit_events(const std::vector<GradingEvent>& events, const SeverityRuleTable& rules);

struct EventFilter {
    std::optional<std::string> clinician_id;
    std::optional<int> round_no;
    std::optional<Arm> arm;

    bool matches(const GradingEvent& event) const;
};

std::vector<GradingEvent> filter_events(const std::vector<GradingEvent>& events, const EventFilter& filter);

struct ClinicianTiming {
    std::string clinician_id;
    std::vector<int> complete_rounds;  // rounds where every case carries a time
    bool time_eligible = false;
};

// A round is complete when it has at least one event, every event carries
// elapsed_seconds, and (given a schedule) the event count equals the number
// of cases assigned to that clinician in that round. Clinicians are listed in
// sorted order; schedule clinicians with no events are included.
std::vector<ClinicianTiming> timing_completeness(const std::vector<GradingEvent>& events,
                                                 const Schedule* schedule = nullptr);

}  // namespace rbench
