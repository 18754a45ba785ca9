#include "readerbench/events.hpp"

#include "readerbench/delimited.hpp"
#include "readerbench/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <map>
#include <set>

namespace rbench {

using nlohmann::json;

namespace {

int int_field(const json& j, const char* key, std::string_view context) {
    const auto it = j.find(key);
    if (it == j.end()) fail(ErrorKind::Validation, std::string(context) + "." + key + " missing");
    if (!it->is_number_integer()) fail(ErrorKind::Validation, std::string(context) + "." + key + " must be an integer");
    return it->get<int>();
}

const json& member(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) fail(ErrorKind::Validation, std::string("missing field ") + key);
    return *it;
}

std::optional<double> optional_number(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_number()) fail(ErrorKind::Validation, std::string(key) + " must be a number or null");
    return it->get<double>();
}

}  // namespace

void to_json(json& j, const EyeGrade& g) {
    j = json{{"drusen", g.drusen}, {"pigment", g.pigment}, {"late_amd", g.late_amd}};
}

void from_json(const json& j, EyeGrade& g) {
    if (!j.is_object()) fail(ErrorKind::Validation, "eye grade must be an object");
    g.drusen = int_field(j, "drusen", "eye");
    g.pigment = int_field(j, "pigment", "eye");
    g.late_amd = int_field(j, "late_amd", "eye");
    validate(g);
}

void to_json(json& j, const PatientGrade& g) { j = json{{"left", g.left}, {"right", g.right}}; }

void from_json(const json& j, PatientGrade& g) {
    if (!j.is_object()) fail(ErrorKind::Validation, "patient grade must be an object");
    for (const char* side : {"left", "right"}) {
        const json& e = member(j, side);
        if (!e.is_object()) fail(ErrorKind::Validation, std::string(side) + " must be an object");
        EyeGrade eye{int_field(e, "drusen", side), int_field(e, "pigment", side), int_field(e, "late_amd", side)};
        validate(eye, side);
        (std::string_view(side) == "left" ? g.left : g.right) = eye;
    }
}

void to_json(json& j, const GradingEvent& e) {
    j = json{{"seq", e.seq},
             {"clinician_id", e.clinician_id},
             {"round_no", e.round_no},
             {"arm", to_string(e.arm)},
             {"batch_id", e.batch_id},
             {"patient_alias", e.patient_alias},
             {"submitted", e.submitted},
             {"derived_severity", e.derived_severity},
             {"elapsed_seconds", e.elapsed_seconds ? json(*e.elapsed_seconds) : json(nullptr)},
             {"presented_at", e.presented_at},
             {"submitted_at", e.submitted_at},
             {"ai_suggestion_shown", e.ai_suggestion_shown},
             {"timing_invalidated", e.timing_invalidated}};
    if (e.client_elapsed_seconds) j["client_elapsed_seconds"] = *e.client_elapsed_seconds;
}

void from_json(const json& j, GradingEvent& e) {
    if (!j.is_object()) fail(ErrorKind::Validation, "event must be a JSON object");
    try {
        e.seq = member(j, "seq").get<std::uint64_t>();
        e.clinician_id = member(j, "clinician_id").get<std::string>();
        e.round_no = member(j, "round_no").get<int>();
        e.arm = parse_arm(member(j, "arm").get<std::string>());
        e.batch_id = member(j, "batch_id").get<std::string>();
        e.patient_alias = member(j, "patient_alias").get<std::string>();
        e.submitted = member(j, "submitted").get<PatientGrade>();
        e.derived_severity = member(j, "derived_severity").get<int>();
        e.elapsed_seconds = optional_number(j, "elapsed_seconds");
        e.presented_at = member(j, "presented_at").get<double>();
        e.submitted_at = member(j, "submitted_at").get<double>();
        e.ai_suggestion_shown = member(j, "ai_suggestion_shown").get<bool>();
        e.timing_invalidated = j.value("timing_invalidated", false);
        e.client_elapsed_seconds = optional_number(j, "client_elapsed_seconds");
    } catch (const json::exception& ex) {
        fail(ErrorKind::Validation, std::string("malformed event: ") + ex.what());
    }
    if (e.round_no < 1 || e.round_no > kProtocolRounds) fail(ErrorKind::Validation, "round_no out of range");
}

std::string event_to_line(const GradingEvent& event) { return json(event).dump(); }

GradingEvent event_from_line(std::string_view line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& ex) {
        fail(ErrorKind::Validation, std::string("event line is not JSON: ") + ex.what());
    }
    return j.get<GradingEvent>();
}

std::vector<GradingEvent> parse_event_log(std::string_view text) {
    std::vector<GradingEvent> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const auto line = text.substr(pos, end - pos);
        ++line_no;
        pos = end + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            out.push_back(event_from_line(line));
        } catch (const Error& ex) {
            fail(ex.kind(), "event log line " + std::to_string(line_no) + ": " + ex.what());
        }
    }
    return out;
}

std::vector<GradingEvent> load_event_log(const std::filesystem::path& path) {
    return parse_event_log(read_text_file(path));
}

std::string format_event_log(const std::vector<GradingEvent>& events) {
    std::string out;
    for (const auto& e : events) {
        out += event_to_line(e);
        out += '\n';
    }
    return out;
}

std::vector<std::string> audit_events(const std::vector<GradingEvent>& events, const SeverityRuleTable& rules) {
    std::vector<std::string> problems;
    for (const auto& e : events) {
        const std::string where = "seq " + std::to_string(e.seq) + ": ";
        if (compute_severity(e.submitted, rules).value() != e.derived_severity) {
            problems.push_back(where + "derived_severity does not match submitted grades");
        }
        if (e.submitted_at < e.presented_at) problems.push_back(where + "submitted before presented");
        if (e.elapsed_seconds) {
            if (e.timing_invalidated) problems.push_back(where + "invalidated timing still carries elapsed_seconds");
            if (std::abs(*e.elapsed_seconds - (e.submitted_at - e.presented_at)) > 1e-6) {
                problems.push_back(where + "elapsed_seconds disagrees with timestamps");
            }
        } else if (!e.timing_invalidated) {
            problems.push_back(where + "elapsed_seconds missing without invalidation");
        }
        if (e.ai_suggestion_shown != (e.arm == Arm::ManualPlusAI)) {
            problems.push_back(where + "ai_suggestion_shown inconsistent with arm");
        }
    }
    return problems;
}

bool EventFilter::matches(const GradingEvent& e) const {
    if (clinician_id && e.clinician_id != *clinician_id) return false;
    if (round_no && e.round_no != *round_no) return false;
    if (arm && e.arm != *arm) return false;
    return true;
}

std::vector<GradingEvent> filter_events(const std::vector<GradingEvent>& events, const EventFilter& filter) {
    std::vector<GradingEvent> out;
    for (const auto& e : events)
        if (filter.matches(e)) out.push_back(e);
    return out;
}

std::vector<ClinicianTiming> timing_completeness(const std::vector<GradingEvent>& events, const Schedule* schedule) {
    struct RoundTally {
        std::size_t events = 0;
        bool all_timed = true;
    };
    std::map<std::string, std::map<int, RoundTally>> tally;
    if (schedule) {
        for (const auto& c : schedule->clinicians) tally[c];
    }
    for (const auto& e : events) {
        auto& t = tally[e.clinician_id][e.round_no];
        ++t.events;
        if (!e.elapsed_seconds) t.all_timed = false;
    }

    std::vector<ClinicianTiming> out;
    for (const auto& [clinician, rounds] : tally) {
        ClinicianTiming ct;
        ct.clinician_id = clinician;
        for (int r = 1; r <= kProtocolRounds; ++r) {
            const auto it = rounds.find(r);
            if (it == rounds.end() || it->second.events == 0 || !it->second.all_timed) continue;
            if (schedule) {
                std::size_t expected = 0;
                if (const auto* plan = schedule->round(r)) {
                    if (const auto* cr = plan->find(clinician)) {
                        for (const auto& item : cr->items) expected += item.order.size();
                    }
                }
                if (it->second.events != expected) continue;
            }
            ct.complete_rounds.push_back(r);
        }
        ct.time_eligible = ct.complete_rounds.size() == static_cast<std::size_t>(kProtocolRounds);
        out.push_back(std::move(ct));
    }
    return out;
}

}  // namespace rbench
