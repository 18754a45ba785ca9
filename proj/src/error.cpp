#include "readerbench/error.hpp"

namespace rbench {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Validation: return "validation";
        case ErrorKind::Argument: return "argument";
        case ErrorKind::NotFound: return "not_found";
        case ErrorKind::Conflict: return "conflict";
        case ErrorKind::OutOfOrder: return "out_of_order";
        case ErrorKind::EndOfRound: return "end_of_round";
        case ErrorKind::Protocol: return "protocol";
        case ErrorKind::PredictorUnavailable: return "predictor_unavailable";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

}  // namespace rbench
