#include "readerbench/predictor.hpp"

#include "readerbench/delimited.hpp"
#include "readerbench/error.hpp"
#include "readerbench/rng.hpp"
#include "readerbench/stats/metrics.hpp"
#include "readerbench/stats/serialize.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <exception>
#include <thread>

namespace rbench {

using nlohmann::json;

namespace {

constexpr const char* kFeatures[] = {"drusen", "pigment", "late_amd"};

std::optional<double> read_confidence(const json& c, const char* key, const std::string& where) {
    const auto it = c.find(key);
    if (it == c.end() || it->is_null()) return std::nullopt;
    if (!it->is_number()) fail(ErrorKind::Validation, where + ".confidence." + key + " must be a number");
    const double v = it->get<double>();
    if (!(v >= 0.0 && v <= 1.0)) fail(ErrorKind::Validation, where + ".confidence." + key + " outside [0,1]");
    return v;
}

EyePrediction read_eye(const json& j, const char* side) {
    const auto it = j.find(side);
    if (it == j.end() || !it->is_object()) fail(ErrorKind::Validation, std::string(side) + " missing or not an object");
    EyePrediction eye;
    int* fields[] = {&eye.grade.drusen, &eye.grade.pigment, &eye.grade.late_amd};
    for (int k = 0; k < 3; ++k) {
        const auto f = it->find(kFeatures[k]);
        if (f == it->end() || !f->is_number_integer()) {
            fail(ErrorKind::Validation, std::string(side) + "." + kFeatures[k] + " missing or not an integer");
        }
        *fields[k] = f->get<int>();
    }
    validate(eye.grade, side);
    if (const auto c = it->find("confidence"); c != it->end() && !c->is_null()) {
        if (!c->is_object()) fail(ErrorKind::Validation, std::string(side) + ".confidence must be an object");
        eye.confidence.drusen = read_confidence(*c, "drusen", side);
        eye.confidence.pigment = read_confidence(*c, "pigment", side);
        eye.confidence.late_amd = read_confidence(*c, "late_amd", side);
    }
    return eye;
}

json write_eye(const EyePrediction& e) {
    json j = e.grade;
    if (!e.confidence.empty()) {
        json c = json::object();
        if (e.confidence.drusen) c["drusen"] = *e.confidence.drusen;
        if (e.confidence.pigment) c["pigment"] = *e.confidence.pigment;
        if (e.confidence.late_amd) c["late_amd"] = *e.confidence.late_amd;
        j["confidence"] = c;
    }
    return j;
}

}  // namespace

void to_json(json& j, const FeaturePrediction& p) { j = json{{"left", write_eye(p.left)}, {"right", write_eye(p.right)}}; }

void from_json(const json& j, FeaturePrediction& p) {
    if (!j.is_object()) fail(ErrorKind::Validation, "prediction must be a JSON object");
    p.left = read_eye(j, "left");
    p.right = read_eye(j, "right");
}

WireResponse parse_wire_response(std::string_view raw) {
    try {
        const json j = json::parse(raw);
        WireResponse r;
        r.prediction = j.get<FeaturePrediction>();
        if (const auto s = j.find("severity"); s != j.end() && !s->is_null()) {
            if (!s->is_number_integer()) fail(ErrorKind::Validation, "severity must be an integer");
            r.wire_severity = s->get<int>();
        }
        return r;
    } catch (const json::exception& ex) {
        fail(ErrorKind::Protocol, std::string("malformed predictor response (") + ex.what() + "): " + std::string(raw));
    } catch (const Error& ex) {
        fail(ErrorKind::Protocol, std::string("malformed predictor response (") + ex.what() + "): " + std::string(raw));
    }
}

PredictRequest make_request(const PatientRecord& record, std::string alias) {
    PredictRequest r;
    r.patient_alias = alias.empty() ? record.patient_id : std::move(alias);
    r.image_left = record.image_left;
    r.image_right = record.image_right;
    r.patient_id = record.patient_id;
    r.gold = record.gold;
    return r;
}

std::string wire_request(const PredictRequest& request) {
    return json{{"patient_alias", request.patient_alias},
                {"images", {{"left", request.image_left}, {"right", request.image_right}}}}
        .dump();
}

void to_json(json& j, const AiSuggestion& s) {
    j = json{{"prediction", s.prediction}, {"severity", s.severity.value()}};
}

void from_json(const json& j, AiSuggestion& s) {
    s.prediction = j.at("prediction").get<FeaturePrediction>();
    s.severity = SeverityLevel(j.at("severity").get<int>());
}

AiSuggestion suggest(Predictor& predictor, const PredictRequest& request, const SeverityRuleTable& rules) {
    const auto response = predictor.predict(request);
    AiSuggestion s;
    s.prediction = response.prediction;
    s.severity = compute_severity(response.prediction.grades(), rules);
    if (response.wire_severity && *response.wire_severity != s.severity.value()) {
        s.wire_mismatch = "predictor reported severity " + std::to_string(*response.wire_severity) +
                          ", recomputed " + std::to_string(s.severity.value()) + " for " + request.patient_alias;
    }
    return s;
}

// ---------------------------------------------------------------------------

SubprocessPredictor::SubprocessPredictor(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {}

SubprocessPredictor::~SubprocessPredictor() { stop(); }

void SubprocessPredictor::start() {
    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
        fail(ErrorKind::PredictorUnavailable, std::string("socketpair: ") + std::strerror(errno));
    }
    const pid_t pid = ::fork();
    if (pid < 0) {
        ::close(sv[0]);
        ::close(sv[1]);
        fail(ErrorKind::PredictorUnavailable, std::string("fork: ") + std::strerror(errno));
    }
    if (pid == 0) {
        // Own process group, so a timeout can kill whatever the shell spawned.
        ::setpgid(0, 0);
        ::dup2(sv[1], STDIN_FILENO);
        ::dup2(sv[1], STDOUT_FILENO);
        ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::setpgid(pid, pid);
    ::close(sv[1]);
    fd_ = sv[0];
    pid_ = pid;
    buffer_.clear();
}

void SubprocessPredictor::stop() {
    if (fd_ >= 0) ::close(fd_);
    if (pid_ > 0) {
        ::kill(-pid_, SIGKILL);
        ::waitpid(pid_, nullptr, 0);
    }
    fd_ = -1;
    pid_ = -1;
    buffer_.clear();
}

WireResponse SubprocessPredictor::predict(const PredictRequest& request) {
    std::lock_guard lock(mutex_);
    if (fd_ < 0) start();

    const std::string line = wire_request(request) + "\n";
    std::size_t sent = 0;
    while (sent < line.size()) {
        const ssize_t n = ::send(fd_, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            stop();
            fail(ErrorKind::PredictorUnavailable, "predictor process not accepting input: " + command_);
        }
        sent += static_cast<std::size_t>(n);
    }

    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    std::size_t newline;
    while ((newline = buffer_.find('\n')) == std::string::npos) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            stop();
            fail(ErrorKind::PredictorUnavailable,
                 "predictor timed out after " + std::to_string(timeout_.count()) + " ms for " + request.patient_alias);
        }
        pollfd p{fd_, POLLIN, 0};
        const int ready = ::poll(&p, 1, static_cast<int>(left.count()));
        if (ready < 0 && errno == EINTR) continue;
        if (ready <= 0) continue;
        char chunk[4096];
        const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
        if (n <= 0) {
            stop();
            fail(ErrorKind::PredictorUnavailable, "predictor process exited: " + command_);
        }
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
    const std::string response = buffer_.substr(0, newline);
    buffer_.erase(0, newline + 1);
    return parse_wire_response(response);
}

HttpPredictor::HttpPredictor(std::string endpoint, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout) {}

WireResponse HttpPredictor::predict(const PredictRequest& request) {
    httplib::Client client(endpoint_);
    const auto secs = static_cast<time_t>(timeout_.count() / 1000);
    const auto usecs = static_cast<time_t>((timeout_.count() % 1000) * 1000);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    const auto res = client.Post("/predict", wire_request(request), "application/json");
    if (!res) {
        fail(ErrorKind::PredictorUnavailable,
             "predictor at " + endpoint_ + " unreachable: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        fail(ErrorKind::Protocol, "predictor returned HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    return parse_wire_response(res->body);
}

WireResponse FixturePredictor::predict(const PredictRequest& request) {
    if (table_) {
        const auto it = table_->find(request.patient_id);
        if (it == table_->end()) fail(ErrorKind::NotFound, "no fixture prediction for " + request.patient_id);
        return {FeaturePrediction::from_grades(it->second), std::nullopt};
    }
    if (!request.gold) fail(ErrorKind::Argument, "fixture echo needs gold grades for " + request.patient_alias);
    return {FeaturePrediction::from_grades(*request.gold), std::nullopt};
}

std::map<std::string, PatientGrade> load_prediction_table(const std::filesystem::path& path) {
    const auto table = read_delimited(path);
    const std::size_t c_id = table.column("patient_id");
    const char* names[] = {"drusen_L", "pigment_L", "late_L", "drusen_R", "pigment_R", "late_R"};
    std::array<std::size_t, 6> cols{};
    for (std::size_t k = 0; k < 6; ++k) cols[k] = table.column(names[k]);
    std::map<std::string, PatientGrade> out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = path.string() + ":" + std::to_string(table.line_numbers[r]);
        std::array<int, 6> v{};
        for (std::size_t k = 0; k < 6; ++k) v[k] = parse_int_field(row[cols[k]], names[k], where);
        PatientGrade g{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
        try {
            validate(g);
        } catch (const Error& ex) {
            fail(ErrorKind::Validation, where + ": " + ex.what());
        }
        if (!out.emplace(row[c_id], g).second) fail(ErrorKind::Validation, where + ": duplicate patient_id " + row[c_id]);
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<std::vector<double>> SimulatedPredictorSpec::identity_rows(int n) {
    std::vector<std::vector<double>> m(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (int i = 0; i < n; ++i) m[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1.0;
    return m;
}

std::vector<std::vector<double>> SimulatedPredictorSpec::uniform_rows(int n) {
    return std::vector<std::vector<double>>(static_cast<std::size_t>(n),
                                            std::vector<double>(static_cast<std::size_t>(n), 1.0 / n));
}

SimulatedPredictorSpec calibrated_predictor_spec(std::uint64_t seed) {
    SimulatedPredictorSpec spec;
    spec.drusen = {{0.77, 0.18, 0.05}, {0.23, 0.57, 0.20}, {0.05, 0.23, 0.72}};
    spec.pigment = {{0.83, 0.17}, {0.26, 0.74}};
    spec.late_amd = {{0.94, 0.06}, {0.14, 0.86}};
    spec.seed = seed;
    return spec;
}

namespace {

void validate_matrix(const std::vector<std::vector<double>>& m, int n, const char* name) {
    if (m.size() != static_cast<std::size_t>(n)) {
        fail(ErrorKind::Validation, std::string(name) + " matrix needs " + std::to_string(n) + " rows");
    }
    for (std::size_t r = 0; r < m.size(); ++r) {
        const std::string where = std::string(name) + " row " + std::to_string(r);
        if (m[r].size() != static_cast<std::size_t>(n)) fail(ErrorKind::Validation, where + " has wrong length");
        double sum = 0.0;
        for (double v : m[r]) {
            if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorKind::Validation, where + " has a negative or non-finite entry");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9) fail(ErrorKind::Validation, where + " sums to " + std::to_string(sum));
    }
}

int draw(const std::vector<std::vector<double>>& m, int gold, Rng& rng) {
    return static_cast<int>(rng.categorical(m[static_cast<std::size_t>(gold)]));
}

}  // namespace

void validate(const SimulatedPredictorSpec& spec) {
    validate_matrix(spec.drusen, kDrusenLevels, "drusen");
    validate_matrix(spec.pigment, kPigmentLevels, "pigment");
    validate_matrix(spec.late_amd, kLateAmdLevels, "late_amd");
}

void to_json(json& j, const SimulatedPredictorSpec& spec) {
    j = json{{"drusen", spec.drusen}, {"pigment", spec.pigment}, {"late_amd", spec.late_amd}, {"seed", spec.seed}};
}

void from_json(const json& j, SimulatedPredictorSpec& spec) {
    try {
        spec.drusen = j.at("drusen").get<std::vector<std::vector<double>>>();
        spec.pigment = j.at("pigment").get<std::vector<std::vector<double>>>();
        spec.late_amd = j.at("late_amd").get<std::vector<std::vector<double>>>();
        spec.seed = j.value("seed", std::uint64_t{0});
    } catch (const json::exception& ex) {
        fail(ErrorKind::Validation, std::string("malformed predictor spec: ") + ex.what());
    }
    validate(spec);
}

FeaturePrediction simulate_predictor(const SimulatedPredictorSpec& spec, const PatientGrade& gold,
                                     std::uint64_t draw_index) {
    validate(gold);
    Rng rng(spec.seed, "predictor", draw_index);
    FeaturePrediction p;
    for (Eye eye : {Eye::Left, Eye::Right}) {
        const EyeGrade& g = gold.eye(eye);
        EyeGrade out{draw(spec.drusen, g.drusen, rng), draw(spec.pigment, g.pigment, rng),
                     draw(spec.late_amd, g.late_amd, rng)};
        (eye == Eye::Left ? p.left : p.right).grade = out;
    }
    return p;
}

SimulatedPredictor::SimulatedPredictor(SimulatedPredictorSpec spec) : spec_(std::move(spec)) { validate(spec_); }

WireResponse SimulatedPredictor::predict(const PredictRequest& request) {
    if (!request.gold) fail(ErrorKind::Argument, "simulated predictor needs gold grades for " + request.patient_alias);
    const std::string& key = request.patient_id.empty() ? request.patient_alias : request.patient_id;
    return {simulate_predictor(spec_, *request.gold, derive_seed(0, key)), std::nullopt};
}

std::string_view to_string(PredictorMode mode) {
    switch (mode) {
        case PredictorMode::Subprocess: return "subprocess";
        case PredictorMode::Http: return "http";
        case PredictorMode::Fixture: return "fixture";
        case PredictorMode::Simulated: return "simulated";
    }
    return "fixture";
}

PredictorMode parse_predictor_mode(std::string_view text) {
    for (auto m : {PredictorMode::Subprocess, PredictorMode::Http, PredictorMode::Fixture, PredictorMode::Simulated}) {
        if (to_string(m) == text) return m;
    }
    fail(ErrorKind::Validation, "unknown predictor mode: " + std::string(text));
}

PredictorBinding parse_binding(std::string_view text) {
    PredictorBinding b;
    const auto colon = text.find(':');
    b.mode = parse_predictor_mode(text.substr(0, colon));
    if (colon != std::string_view::npos) b.target = std::string(text.substr(colon + 1));
    if ((b.mode == PredictorMode::Subprocess || b.mode == PredictorMode::Http) && b.target.empty()) {
        fail(ErrorKind::Validation, std::string(to_string(b.mode)) + " binding needs a target");
    }
    return b;
}

std::unique_ptr<Predictor> make_predictor(const PredictorBinding& b) {
    switch (b.mode) {
        case PredictorMode::Subprocess: return std::make_unique<SubprocessPredictor>(b.target, b.timeout);
        case PredictorMode::Http: return std::make_unique<HttpPredictor>(b.target, b.timeout);
        case PredictorMode::Fixture:
            if (b.target.empty()) return std::make_unique<FixturePredictor>();
            return std::make_unique<FixturePredictor>(load_prediction_table(b.target));
        case PredictorMode::Simulated: {
            SimulatedPredictorSpec spec = calibrated_predictor_spec();
            if (!b.target.empty()) spec = json::parse(read_text_file(b.target)).get<SimulatedPredictorSpec>();
            spec.seed = b.seed;
            return std::make_unique<SimulatedPredictor>(std::move(spec));
        }
    }
    fail(ErrorKind::Argument, "unsupported predictor mode");
}

// ---------------------------------------------------------------------------

PredictionCache::PredictionCache(PredictionCache&& other) noexcept {
    std::lock_guard lock(other.mutex_);
    entries_ = std::move(other.entries_);
}

PredictionCache& PredictionCache::operator=(PredictionCache&& other) noexcept {
    if (this != &other) {
        std::scoped_lock lock(mutex_, other.mutex_);
        entries_ = std::move(other.entries_);
    }
    return *this;
}

void PredictionCache::put(const std::string& patient_id, AiSuggestion suggestion) {
    std::lock_guard lock(mutex_);
    if (!entries_.emplace(patient_id, std::move(suggestion)).second) {
        fail(ErrorKind::Conflict, "prediction for " + patient_id + " already cached");
    }
}

const AiSuggestion* PredictionCache::find(const std::string& patient_id) const {
    std::lock_guard lock(mutex_);
    const auto it = entries_.find(patient_id);
    return it == entries_.end() ? nullptr : &it->second;
}

const AiSuggestion& PredictionCache::at(const std::string& patient_id) const {
    const auto* s = find(patient_id);
    if (!s) fail(ErrorKind::NotFound, "no cached prediction for " + patient_id);
    return *s;
}

std::size_t PredictionCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

PredictionCache PredictionCache::precompute(Predictor& predictor, const std::vector<PatientRecord>& records,
                                            const SeverityRuleTable& rules, unsigned parallelism) {
    PredictionCache cache;
    const unsigned workers = std::max(1u, std::min<unsigned>(parallelism, static_cast<unsigned>(records.size())));
    std::vector<std::exception_ptr> errors(workers);
    auto work = [&](unsigned w) {
        try {
            for (std::size_t i = w; i < records.size(); i += workers) {
                cache.put(records[i].patient_id, suggest(predictor, make_request(records[i]), rules));
            }
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return cache;
}

// ---------------------------------------------------------------------------

ModelComparison compare_models(std::string dataset, std::span<const int> gold_a, std::span<const int> pred_a,
                               std::span<const int> gold_b, std::span<const int> pred_b,
                               const stats::BootstrapOptions& options, std::string model_a, std::string model_b) {
    if (gold_a.size() != pred_a.size() || gold_b.size() != pred_b.size() || gold_a.size() != gold_b.size()) {
        fail(ErrorKind::Argument, "prediction and gold vectors differ in length");
    }
    const std::vector<int> classes = {0, 1, 2, 3, 4, 5};
    ModelComparison c;
    c.dataset = std::move(dataset);
    c.model_a = std::move(model_a);
    c.model_b = std::move(model_b);
    c.patients = gold_a.size();
    c.bootstrap = stats::bootstrap_compare(gold_a, pred_a, gold_b, pred_b, classes, options);
    const auto ma = stats::per_class_metrics(stats::confusion(gold_a, pred_a, classes));
    const auto mb = stats::per_class_metrics(stats::confusion(gold_b, pred_b, classes));
    for (std::size_t k = 0; k < classes.size(); ++k) {
        if (ma.per_class[k].support == 0) continue;
        c.scales.push_back({classes[k], ma.per_class[k].f1, mb.per_class[k].f1});
    }
    return c;
}

void to_json(json& j, const ModelComparison& c) {
    json scales = json::array();
    for (const auto& s : c.scales) scales.push_back({{"level", s.level}, {"f1_a", s.f1_a}, {"f1_b", s.f1_b}});
    const json overall{{"f1_a", c.bootstrap.mean_f1_a}, {"f1_b", c.bootstrap.mean_f1_b},
                       {"ci_a", c.bootstrap.ci_a},       {"ci_b", c.bootstrap.ci_b},
                       {"p", c.bootstrap.test.p_two_sided}};
    j = json{{"dataset", c.dataset}, {"model_a", c.model_a}, {"model_b", c.model_b}, {"patients", c.patients},
             {"overall", overall},   {"scales", scales},     {"bootstrap", c.bootstrap}};
}

}  // namespace rbench
