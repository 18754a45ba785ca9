#include "readerbench/http_api.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace rbench {

using nlohmann::json;

int http_status(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Validation:
        case ErrorKind::Argument: return 400;
        case ErrorKind::NotFound: return 404;
        case ErrorKind::Conflict:
        case ErrorKind::OutOfOrder: return 409;
        case ErrorKind::EndOfRound: return 410;
        case ErrorKind::PredictorUnavailable: return 503;
        case ErrorKind::Protocol: return 502;
        case ErrorKind::Io: return 500;
    }
    return 500;
}

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorKind kind, const std::string& message) {
    send_json(res, json{{"error", to_string(kind)}, {"message", message}}, http_status(kind));
}

json parse_body(const httplib::Request& req) {
    try {
        json j = json::parse(req.body);
        if (!j.is_object()) fail(ErrorKind::Validation, "request body must be a JSON object");
        return j;
    } catch (const json::parse_error& ex) {
        fail(ErrorKind::Validation, std::string("request body is not JSON: ") + ex.what());
    }
}

template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const Error& ex) {
            send_error(res, ex.kind(), ex.what());
        } catch (const json::exception& ex) {
            send_error(res, ErrorKind::Validation, ex.what());
        }
    };
}

}  // namespace

HttpApi::HttpApi(GradingService& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
    auto& svc = service_;
    server_->Post("/sessions", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req);
        const auto clinician = body.at("clinician_id").get<std::string>();
        const int round = body.at("round_no").get<int>();
        send_json(res, svc.start_session(clinician, round), 201);
    }));
    server_->Get(R"(/sessions/([^/]+)/next)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
        send_json(res, svc.next_case(req.matches[1]));
    }));
    server_->Post(R"(/sessions/([^/]+)/submit)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req);
        std::optional<double> client;
        if (const auto it = body.find("client_elapsed_seconds"); it != body.end() && !it->is_null()) {
            client = it->get<double>();
        }
        const auto grades = body.at("grades").get<PatientGrade>();
        send_json(res, svc.submit(req.matches[1], body.at("patient_alias").get<std::string>(), grades, client));
    }));
    server_->Post(R"(/sessions/([^/]+)/abandon)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
        svc.abandon(req.matches[1]);
        send_json(res, svc.session(req.matches[1]));
    }));
    server_->Get("/events", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
        EventFilter filter;
        if (req.has_param("clinician")) filter.clinician_id = req.get_param_value("clinician");
        if (req.has_param("round")) {
            const auto text = req.get_param_value("round");
            try {
                filter.round_no = std::stoi(text);
            } catch (const std::exception&) {
                fail(ErrorKind::Validation, "round must be an integer, got " + text);
            }
        }
        if (req.has_param("arm")) filter.arm = parse_arm(req.get_param_value("arm"));
        res.set_content(format_event_log(svc.export_events(filter)), "application/x-ndjson");
    }));
    server_->Get("/admin/progress", guarded([&svc](const httplib::Request&, httplib::Response& res) {
        send_json(res, svc.progress());
    }));
}

HttpApi::~HttpApi() { stop(); }

int HttpApi::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = server_->bind_to_any_port(host);
        if (bound < 0) fail(ErrorKind::Io, "cannot bind " + host);
        return bound;
    }
    if (!server_->bind_to_port(host, port)) fail(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpApi::listen() { server_->listen_after_bind(); }

void HttpApi::stop() {
    if (server_->is_running()) server_->stop();
}

void HttpApi::wait_until_ready() { server_->wait_until_ready(); }

}  // namespace rbench
