#pragma once

// HTTP JSON front end for GradingService.
//
//   POST /sessions                 {"clinician_id", "round_no"}            -> 201 Session
//   GET  /sessions/{id}/next                                               -> CaseView
//   POST /sessions/{id}/submit     {"patient_alias", "grades", "client_elapsed_seconds"?} -> GradingEvent
//   POST /sessions/{id}/abandon                                            -> Session
//   GET  /events?clinician=&round=&arm=                                    -> JSON lines
//   GET  /admin/progress                                                   -> Progress
//
// Errors are {"error": <kind>, "message": <text>} with the status from
// http_status().

#include "readerbench/error.hpp"
#include "readerbench/service.hpp"

#include <memory>
#include <string>

namespace httplib {
class Server;
}

namespace rbench {

int http_status(ErrorKind kind);

class HttpApi {
public:
    explicit HttpApi(GradingService& service);
    ~HttpApi();
    HttpApi(const HttpApi&) = delete;
    HttpApi& operator=(const HttpApi&) = delete;

    // Port 0 binds an ephemeral port; returns the bound port.
    int bind(const std::string& host, int port);
    void listen();  // blocks until stop()
    void stop();
    void wait_until_ready();

private:
    GradingService& service_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace rbench
