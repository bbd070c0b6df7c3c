#include "taxotrace/error.hpp"

namespace taxotrace {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Validation: return "validation";
        case ErrorKind::NotFound: return "not_found";
        case ErrorKind::Precondition: return "precondition";
        case ErrorKind::Conflict: return "conflict";
        case ErrorKind::Unauthorized: return "unauthorized";
        case ErrorKind::Forbidden: return "forbidden";
        case ErrorKind::Persistence: return "persistence";
    }
    return "unknown";
}

}  // namespace taxotrace
