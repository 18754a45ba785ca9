#include "readerbench/service.hpp"

#include "readerbench/error.hpp"
#include "readerbench/rng.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <fstream>
#include <set>

namespace rbench {

using nlohmann::json;

double SystemClock::now() {
    using namespace std::chrono;
    return duration<double>(system_clock::now().time_since_epoch()).count();
}

void ManualClock::advance(double seconds) {
    double current = now_.load();
    while (!now_.compare_exchange_weak(current, current + seconds)) {
    }
}

EventLog::EventLog(std::filesystem::path path) : path_(std::move(path)) {
    if (std::filesystem::exists(*path_)) {
        events_ = load_event_log(*path_);
        for (std::size_t i = 0; i < events_.size(); ++i) {
            if (events_[i].seq != i) {
                fail(ErrorKind::Validation, path_->string() + ": seq " + std::to_string(events_[i].seq) +
                                                " at position " + std::to_string(i));
            }
        }
    } else if (path_->has_parent_path()) {
        std::filesystem::create_directories(path_->parent_path());
    }
}

GradingEvent EventLog::append(GradingEvent event) {
    std::lock_guard lock(mutex_);
    event.seq = events_.size();
    if (path_) {
        std::ofstream out(*path_, std::ios::app | std::ios::binary);
        out << event_to_line(event) << '\n';
        out.flush();
        if (!out) fail(ErrorKind::Io, "cannot append to event log " + path_->string());
    }
    events_.push_back(event);
    return event;
}

std::vector<GradingEvent> EventLog::snapshot() const {
    std::lock_guard lock(mutex_);
    return events_;
}

std::size_t EventLog::size() const {
    std::lock_guard lock(mutex_);
    return events_.size();
}

void to_json(json& j, const Session& s) {
    j = json{{"session_id", s.session_id}, {"clinician_id", s.clinician_id}, {"round_no", s.round_no},
             {"position", s.position},     {"total", s.total},               {"started_at", s.started_at},
             {"active", s.active}};
}

void to_json(json& j, const CaseView& v) {
    j = json{{"session_id", v.session_id},
             {"position", v.position},
             {"total", v.total},
             {"patient_alias", v.patient_alias},
             {"batch_id", v.batch_id},
             {"images", {{"left", v.image_left}, {"right", v.image_right}}},
             {"arm", to_string(v.arm)}};
    if (v.ai_suggestion) j["ai_suggestion"] = *v.ai_suggestion;
}

namespace {

const std::set<std::string> kPredictorKeys = {"ai_suggestion", "prediction", "confidence", "severity",
                                               "drusen",        "pigment",    "late_amd"};

void scan(const json& j, const std::string& path, std::vector<std::string>& out) {
    if (j.is_object()) {
        for (const auto& [key, value] : j.items()) {
            const std::string p = path.empty() ? key : path + "." + key;
            if (kPredictorKeys.contains(key)) out.push_back(p);
            scan(value, p, out);
        }
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) scan(j[i], path + "[" + std::to_string(i) + "]", out);
    }
}

}  // namespace

std::vector<std::string> predictor_fields(const json& payload) {
    std::vector<std::string> out;
    scan(payload, "", out);
    return out;
}

void to_json(json& j, const Progress& p) {
    json rows = json::array();
    for (const auto& r : p.rows) {
        rows.push_back({{"clinician_id", r.clinician_id},
                        {"round_no", r.round_no},
                        {"submitted", r.submitted},
                        {"total", r.total},
                        {"active_session", r.active_session}});
    }
    j = json{{"rows", rows}, {"events", p.events}, {"expected_events", p.expected_events}};
}

// ---------------------------------------------------------------------------

GradingService::GradingService(Schedule schedule, std::vector<PatientRecord> cohort, SeverityRuleTable rules,
                               std::shared_ptr<const PredictionCache> cache, std::shared_ptr<Predictor> predictor,
                               Clock& clock, EventLog& log, ServiceOptions options)
    : schedule_(std::move(schedule)),
      rules_(std::move(rules)),
      cache_(std::move(cache)),
      predictor_(std::move(predictor)),
      clock_(clock),
      log_(log),
      options_(options) {
    for (auto& r : cohort) {
        const std::string id = r.patient_id;
        records_.emplace(id, std::move(r));
    }
    for (const auto& [alias, patient] : schedule_.alias_registry) {
        if (!records_.contains(patient)) fail(ErrorKind::Validation, "schedule patient " + patient + " missing from cohort");
    }
}

std::shared_ptr<GradingService::SessionState> GradingService::find_session(const std::string& session_id) const {
    std::lock_guard lock(sessions_mutex_);
    const auto it = sessions_.find(session_id);
    if (it == sessions_.end()) fail(ErrorKind::NotFound, "unknown session " + session_id);
    return it->second;
}

const PatientRecord& GradingService::record_for_alias(const std::string& alias) const {
    return records_.at(schedule_.patient_for_alias(alias));
}

Session GradingService::start_session(const std::string& clinician_id, int round_no) {
    const RoundPlan* plan = schedule_.round(round_no);
    if (!plan) fail(ErrorKind::NotFound, "round " + std::to_string(round_no) + " is not scheduled");
    const ClinicianRound* cr = plan->find(clinician_id);
    if (!cr) fail(ErrorKind::NotFound, "clinician " + clinician_id + " has no assignment in round " + std::to_string(round_no));

    auto state = std::make_shared<SessionState>();
    for (const auto& item : cr->items)
        for (const auto& alias : item.order) state->cases.push_back({alias, item.batch_id, item.arm});

    // Events already in the log for this pair (e.g. before a restart) count
    // as done; the session resumes after them.
    std::size_t done = 0;
    for (const auto& e : log_.snapshot())
        if (e.clinician_id == clinician_id && e.round_no == round_no) ++done;

    std::lock_guard lock(sessions_mutex_);
    const auto key = std::make_pair(clinician_id, round_no);
    if (const auto it = by_pair_.find(key); it != by_pair_.end()) {
        const auto& existing = sessions_.at(it->second);
        std::lock_guard session_lock(existing->mutex);
        if (existing->info.active) {
            fail(ErrorKind::Conflict, "session " + it->second + " already active for " + clinician_id + " round " +
                                          std::to_string(round_no));
        }
    }
    if (done >= state->cases.size()) {
        fail(ErrorKind::Conflict, clinician_id + " has already completed round " + std::to_string(round_no));
    }

    state->info.session_id = fmt::format("S{:016x}", derive_seed(options_.seed, "session", session_counter_++));
    state->info.clinician_id = clinician_id;
    state->info.round_no = round_no;
    state->info.position = done;
    state->info.total = state->cases.size();
    state->info.started_at = clock_.now();
    state->info.active = true;
    sessions_[state->info.session_id] = state;
    by_pair_[key] = state->info.session_id;
    return state->info;
}

AiSuggestion GradingService::suggestion_for(const PatientRecord& record, const std::string& alias) {
    if (cache_) {
        if (const auto* s = cache_->find(record.patient_id)) return *s;
    }
    if (!predictor_) {
        fail(ErrorKind::PredictorUnavailable, "no prediction available for case " + alias + "; case deferred");
    }
    return suggest(*predictor_, make_request(record, alias), rules_);
}

CaseView GradingService::next_case(const std::string& session_id) {
    auto state = find_session(session_id);
    std::lock_guard lock(state->mutex);
    if (state->info.position >= state->cases.size()) {
        fail(ErrorKind::EndOfRound, "round " + std::to_string(state->info.round_no) + " complete for " +
                                        state->info.clinician_id);
    }
    const Case& c = state->cases[state->info.position];
    const PatientRecord& record = record_for_alias(c.alias);

    CaseView view;
    view.session_id = session_id;
    view.position = state->info.position;
    view.total = state->cases.size();
    view.patient_alias = c.alias;
    view.batch_id = c.batch_id;
    view.image_left = record.image_left;
    view.image_right = record.image_right;
    view.arm = c.arm;
    // A suggestion that cannot be produced defers the case: the error
    // propagates and the clock does not start.
    if (c.arm == Arm::ManualPlusAI) view.ai_suggestion = suggestion_for(record, c.alias);
    if (!state->presented_at) {
        state->presented_at = clock_.now();
        state->timing_invalidated = false;
    }
    return view;
}

GradingEvent GradingService::submit(const std::string& session_id, const std::string& patient_alias,
                                    const PatientGrade& grades, std::optional<double> client_elapsed_seconds) {
    auto state = find_session(session_id);
    std::lock_guard lock(state->mutex);
    if (state->info.position >= state->cases.size()) {
        fail(ErrorKind::EndOfRound, "round already complete for session " + session_id);
    }
    const Case& c = state->cases[state->info.position];
    if (!state->presented_at) fail(ErrorKind::OutOfOrder, "case " + patient_alias + " has not been presented");
    if (patient_alias != c.alias) {
        fail(ErrorKind::OutOfOrder, "submitted " + patient_alias + " but the current case is " + c.alias);
    }
    validate(grades);

    GradingEvent e;
    e.clinician_id = state->info.clinician_id;
    e.round_no = state->info.round_no;
    e.arm = c.arm;
    e.batch_id = c.batch_id;
    e.patient_alias = c.alias;
    e.submitted = grades;
    e.derived_severity = compute_severity(grades, rules_).value();
    e.presented_at = *state->presented_at;
    e.submitted_at = std::max(clock_.now(), e.presented_at);
    if (!state->timing_invalidated) e.elapsed_seconds = e.submitted_at - e.presented_at;
    e.timing_invalidated = state->timing_invalidated;
    e.ai_suggestion_shown = c.arm == Arm::ManualPlusAI;
    e.client_elapsed_seconds = client_elapsed_seconds;
    e = log_.append(std::move(e));

    ++state->info.position;
    state->presented_at.reset();
    state->timing_invalidated = false;
    if (state->info.position == state->cases.size()) state->info.active = false;
    return e;
}

void GradingService::abandon(const std::string& session_id) {
    auto state = find_session(session_id);
    std::lock_guard lock(state->mutex);
    if (!state->presented_at) fail(ErrorKind::OutOfOrder, "no case in progress for session " + session_id);
    state->timing_invalidated = true;
}

Session GradingService::session(const std::string& session_id) const {
    auto state = find_session(session_id);
    std::lock_guard lock(state->mutex);
    return state->info;
}

std::vector<GradingEvent> GradingService::export_events(const EventFilter& filter) const {
    return filter_events(log_.snapshot(), filter);
}

Progress GradingService::progress() const {
    const auto events = log_.snapshot();
    std::map<std::pair<std::string, int>, std::size_t> submitted;
    for (const auto& e : events) ++submitted[{e.clinician_id, e.round_no}];

    Progress p;
    p.events = events.size();
    for (const auto& plan : schedule_.rounds) {
        for (const auto& cr : plan.assignments) {
            ProgressRow row;
            row.clinician_id = cr.clinician_id;
            row.round_no = plan.round_no;
            for (const auto& item : cr.items) row.total += item.order.size();
            const auto key = std::make_pair(cr.clinician_id, plan.round_no);
            if (const auto it = submitted.find(key); it != submitted.end()) row.submitted = it->second;
            {
                std::lock_guard lock(sessions_mutex_);
                if (const auto it = by_pair_.find(key); it != by_pair_.end()) {
                    const auto& s = sessions_.at(it->second);
                    std::lock_guard session_lock(s->mutex);
                    row.active_session = s->info.active;
                }
            }
            p.expected_events += row.total;
            p.rows.push_back(row);
        }
    }
    std::sort(p.rows.begin(), p.rows.end(), [](const ProgressRow& a, const ProgressRow& b) {
        return std::tie(a.clinician_id, a.round_no) < std::tie(b.clinician_id, b.round_no);
    });
    return p;
}

}  // namespace rbench
