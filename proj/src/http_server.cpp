#include "taxotrace/http_server.hpp"

#include <charconv>
#include <exception>
#include <functional>

#include "httplib.h"

namespace taxotrace {
namespace {

using nlohmann::json;

constexpr const char* kJson = "application/json";
constexpr const char* kTokenHeader = "X-Session-Token";

void send_error(httplib::Response& res, int status, std::string_view kind, const std::string& message) {
    res.status = status;
    res.set_content(json{{"error", kind}, {"message", message}}.dump(), kJson);
}

/// Runs a handler and maps library errors onto HTTP statuses.
httplib::Server::Handler guarded(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    return [handler = std::move(handler)](const httplib::Request& req, httplib::Response& res) {
        try {
            handler(req, res);
        } catch (const Error& e) {
            send_error(res, http_status(e.kind()), to_string(e.kind()), e.what());
        } catch (const json::exception& e) {
            send_error(res, 400, "parse", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "internal", e.what());
        }
    };
}

json body_of(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parse, std::string("malformed JSON body: ") + e.what());
    }
}

std::string token_of(const httplib::Request& req) {
    return req.get_header_value(kTokenHeader);
}

void send_json(httplib::Response& res, const json& doc, int status = 200) {
    res.status = status;
    res.set_content(doc.dump(), kJson);
}

}  // namespace

int http_status(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Parse:
        case ErrorKind::Validation: return 400;
        case ErrorKind::Unauthorized: return 401;
        case ErrorKind::Forbidden: return 403;
        case ErrorKind::NotFound: return 404;
        case ErrorKind::Conflict:
        case ErrorKind::Precondition: return 409;
        case ErrorKind::Persistence: return 500;
    }
    return 500;
}

void register_routes(httplib::Server& server, Service& service) {
    server.Get("/v1/health", guarded([](const httplib::Request&, httplib::Response& res) {
                   send_json(res, {{"status", "ok"}});
               }));
    server.Post("/v1/session", guarded([&service](const httplib::Request& req, httplib::Response& res) {
                    send_json(res, service.create_session(body_of(req)), 201);
                }));
    server.Get("/v1/task", guarded([&service](const httplib::Request& req, httplib::Response& res) {
                   send_json(res, service.get_task(token_of(req)));
               }));
    server.Post("/v1/decision", guarded([&service](const httplib::Request& req, httplib::Response& res) {
                    send_json(res, service.post_decision(token_of(req), body_of(req)));
                }));
    server.Post("/v1/annotation", guarded([&service](const httplib::Request& req, httplib::Response& res) {
                    send_json(res, service.post_annotation(token_of(req), body_of(req)));
                }));
    server.Get("/v1/search", guarded([&service](const httplib::Request& req, httplib::Response& res) {
                   std::optional<std::size_t> limit;
                   if (req.has_param("limit")) {
                       const auto text = req.get_param_value("limit");
                       std::size_t value = 0;
                       const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
                       if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
                           throw Error(ErrorKind::Validation, "limit must be a non-negative integer");
                       }
                       limit = value;
                   }
                   send_json(res, service.search(token_of(req), req.get_param_value("q"), limit));
               }));
    server.Get("/v1/report", guarded([&service](const httplib::Request&, httplib::Response& res) {
                   send_json(res, service.report());
               }));
    server.Get("/v1/history", guarded([&service](const httplib::Request&, httplib::Response& res) {
                   send_json(res, service.history_json());
               }));
    server.Get("/v1/export", guarded([&service](const httplib::Request& req, httplib::Response& res) {
                   std::optional<Treatment> filter;
                   if (req.has_param("treatment")) filter = parse_treatment(req.get_param_value("treatment"));
                   res.set_content(service.export_dataset(filter), "text/csv");
               }));
}

}  // namespace taxotrace
