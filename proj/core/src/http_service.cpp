#include "protoloop/http_service.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <thread>

namespace protoloop {

int http_status(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::UnknownTask:
        case ErrorCode::UnknownSnapshot:
        case ErrorCode::FileMissing:
            return 404;
        case ErrorCode::WrongStage:
        case ErrorCode::ActiveTaskExists:
        case ErrorCode::NotNextTask:
        case ErrorCode::NoActiveTask:
        case ErrorCode::PlanLocked:
        case ErrorCode::PositionBeforeApproved:
        case ErrorCode::TaskNotPending:
        case ErrorCode::IllegalTransition:
        case ErrorCode::SupersededSnapshot:
        case ErrorCode::DuplicateTaskSnapshot:
        case ErrorCode::ProjectExists:
        case ErrorCode::ProjectLocked:
            return 409;
        case ErrorCode::BadRequest:
        case ErrorCode::InvalidRequest:
        case ErrorCode::InvalidPath:
        case ErrorCode::EmptyGoal:
        case ErrorCode::EmptyPlan:
        case ErrorCode::PositionOutOfRange:
        case ErrorCode::Unconfirmed:
        case ErrorCode::MissingSnapshotRef:
            return 400;
        case ErrorCode::InvalidAnchor:
        case ErrorCode::InvalidSnippet:
        case ErrorCode::MatchNotFound:
        case ErrorCode::LineOutOfRange:
        case ErrorCode::FileExists:
        case ErrorCode::BatchFailed:
        case ErrorCode::SchemaViolation:
            return 422;
        case ErrorCode::SchemaInvalidAfterRetries:
        case ErrorCode::TransportError:
        case ErrorCode::FixtureExhausted:
        case ErrorCode::FixtureMismatch:
        case ErrorCode::Cancelled:
            return 502;
        default:
            return 500;
    }
}

std::string_view mime_type(std::string_view path) noexcept {
    const auto dot = path.rfind('.');
    const auto ext = dot == std::string_view::npos ? std::string_view{} : path.substr(dot + 1);
    if (ext == "html" || ext == "htm") return "text/html; charset=utf-8";
    if (ext == "js" || ext == "mjs") return "text/javascript; charset=utf-8";
    if (ext == "css") return "text/css; charset=utf-8";
    if (ext == "json") return "application/json";
    if (ext == "svg") return "image/svg+xml";
    if (ext == "txt" || ext == "md") return "text/plain; charset=utf-8";
    return "application/octet-stream";
}

namespace {

void send_json(httplib::Response& res, const nlohmann::json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
    nlohmann::json body{{"error", e.name()}, {"message", e.what()}};
    if (const auto* schema = dynamic_cast<const SchemaError*>(&e)) body["path"] = schema->path();
    if (const auto* batch = dynamic_cast<const BatchError*>(&e)) {
        body["index"] = batch->index();
        body["cause"] = error_name(batch->cause());
    }
    send_json(res, body, http_status(e.code()));
}

void no_cache(httplib::Response& res) {
    res.set_header("Cache-Control", "no-store, no-cache, must-revalidate, max-age=0");
    res.set_header("Pragma", "no-cache");
    res.set_header("Expires", "0");
}

nlohmann::json body_of(const httplib::Request& req) {
    if (req.body.empty()) return nlohmann::json::object();
    auto doc = nlohmann::json::parse(req.body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) fail(ErrorCode::BadRequest, "body must be a JSON object");
    return doc;
}

std::uint64_t id_of(const httplib::Request& req, int group = 1) {
    return std::stoull(req.matches[group].str());
}

}  // namespace

struct HttpService::Impl {
    Project& project;
    ServiceOptions options;
    httplib::Server server;
    std::atomic<bool> running{false};
    std::atomic<bool> stop_requested{false};

    Impl(Project& p, ServiceOptions o) : project(p), options(std::move(o)) {
        // httplib's default adds SO_REUSEPORT, which would let a second
        // server share the port silently instead of failing with PortInUse.
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
        });
        routes();
    }

    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    static Handler guarded(Handler inner) {
        return [inner = std::move(inner)](const httplib::Request& req, httplib::Response& res) {
            try {
                inner(req, res);
            } catch (const Error& e) {
                send_error(res, e);
            } catch (const nlohmann::json::exception& e) {
                send_error(res, Error(ErrorCode::BadRequest, e.what()));
            } catch (const std::exception& e) {
                send_error(res, Error(ErrorCode::IoError, e.what()));
            }
        };
    }

    /// Runs one engine operation and answers with its result and the new view.
    Handler mutation(std::string verb,
                     std::function<nlohmann::json(const httplib::Request&)> payload) {
        return guarded([this, verb = std::move(verb), payload = std::move(payload)](
                           const httplib::Request& req, httplib::Response& res) {
            auto result = project.execute(verb, payload(req));
            send_json(res, {{"result", result}, {"session", session_view(*project.current())}});
        });
    }

    void routes() {
        server.Get("/api/session", guarded([this](const httplib::Request&, httplib::Response& res) {
                       send_json(res, session_view(*project.current()));
                   }));

        server.Post("/api/projects", mutation("start_session", [](const httplib::Request& req) {
                        auto body = body_of(req);
                        nlohmann::json payload{{"goal", body.at("goal")}};
                        if (body.contains("session_id")) payload["session_id"] = body["session_id"];
                        return payload;
                    }));
        server.Post("/api/spec/review", mutation("review_spec", body_of));
        server.Post("/api/plan/review", mutation("review_plan", body_of));
        server.Post("/api/plan/tasks", mutation("add_task", body_of));
        server.Patch(R"(/api/plan/tasks/(\d+))", mutation("update_task", [](const httplib::Request& req) {
                         auto body = body_of(req);
                         body["id"] = id_of(req);
                         return body;
                     }));
        server.Delete(R"(/api/plan/tasks/(\d+))", mutation("remove_task", [](const httplib::Request& req) {
                          return nlohmann::json{{"id", id_of(req)}};
                      }));
        server.Post(R"(/api/tasks/(\d+)/run)", mutation("run_task", [](const httplib::Request& req) {
                        return nlohmann::json{{"id", id_of(req)}};
                    }));
        server.Post(R"(/api/tasks/(\d+)/resolve)", mutation("resolve_task", [](const httplib::Request& req) {
                        auto body = body_of(req);
                        body["id"] = id_of(req);
                        return body;
                    }));
        server.Post("/api/rollback", mutation("rollback_to", body_of));

        server.Get("/api/snapshots", guarded([this](const httplib::Request&, httplib::Response& res) {
                       const auto session = project.current();
                       nlohmann::json head = nullptr;
                       if (auto h = session->history.head()) head = h->value;
                       send_json(res, {{"head", head},
                                       {"snapshots", summaries_to_json(session->history.list())}});
                   }));
        server.Get(R"(/api/snapshots/(\d+)/files/(.+))",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const std::string path = req.matches[2].str();
                       validate_relative_path(path);
                       const auto session = project.current();
                       auto bytes = session->history.read(SnapshotId{id_of(req)}, path);
                       if (!bytes) fail(ErrorCode::FileMissing, path + " is not in that snapshot");
                       res.set_content(*bytes, std::string(mime_type(path)));
                   }));

        server.Get("/api/events", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const std::size_t since =
                           req.has_param("since") ? std::stoull(req.get_param_value("since")) : 0;
                       long timeout_ms =
                           req.has_param("timeout_ms") ? std::stol(req.get_param_value("timeout_ms")) : 25000;
                       timeout_ms = std::clamp(timeout_ms, 0L, 60000L);
                       project.wait_for_events(since, std::chrono::milliseconds(timeout_ms));
                       const auto session = project.current();
                       nlohmann::json events = nlohmann::json::array();
                       for (const auto& e : session->event_log) {
                           if (e.sequence > since) events.push_back(event_to_json(e));
                       }
                       send_json(res, {{"event_count", session->event_log.size()},
                                       {"stage", to_string(session->stage)},
                                       {"events", std::move(events)}});
                   }));

        server.Get(R"(/preview(/.*)?)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       std::string path = req.matches[1].matched ? req.matches[1].str().substr(1) : "";
                       if (path.empty() || path.back() == '/') path += "index.html";
                       validate_relative_path(path);
                       no_cache(res);
                       const auto session = project.current();
                       if (!session->workspace.contains(path)) {
                           fail(ErrorCode::FileMissing, path + " is not in the workspace");
                       }
                       res.set_content(session->workspace.at(path), std::string(mime_type(path)));
                   }));

        if (options.ui_dir) server.set_mount_point("/", options.ui_dir->string());
    }
};

HttpService::HttpService(Project& project, ServiceOptions options)
    : impl_(std::make_unique<Impl>(project, std::move(options))) {}

HttpService::~HttpService() = default;

int HttpService::bind() {
    auto& o = impl_->options;
    if (o.port == 0) {
        const int port = impl_->server.bind_to_any_port(o.host);
        if (port < 0) fail(ErrorCode::PortInUse, "cannot bind " + o.host);
        o.port = port;
        return port;
    }
    if (!impl_->server.bind_to_port(o.host, o.port)) {
        fail(ErrorCode::PortInUse, o.host + ":" + std::to_string(o.port) + " is not available");
    }
    return o.port;
}

void HttpService::run() {
    impl_->running = true;
    if (!impl_->stop_requested) impl_->server.listen_after_bind();
    impl_->running = false;
}

void HttpService::stop() {
    impl_->stop_requested = true;
    impl_->project.cancel();
    // httplib ignores stop() until the accept loop has started
    while (impl_->running && !impl_->server.is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(1));
    impl_->server.stop();
}

}  // namespace protoloop
