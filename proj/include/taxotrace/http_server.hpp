#pragma once

#include <string>

#include "taxotrace/error.hpp"
#include "taxotrace/service.hpp"

namespace httplib {
class Server;
}

namespace taxotrace {

int http_status(ErrorKind kind);

/// Installs the /v1 routes. Requests carry the session in the
/// X-Session-Token header; errors are {"error": kind, "message": text}.
void register_routes(httplib::Server& server, Service& service);

}  // namespace taxotrace
