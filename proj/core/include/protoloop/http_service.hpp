#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "protoloop/error.hpp"
#include "protoloop/project.hpp"

namespace protoloop {

/// HTTP status an engine error maps to.
int http_status(ErrorCode code) noexcept;

/// Content-Type guessed from the file extension.
std::string_view mime_type(std::string_view path) noexcept;

struct ServiceOptions {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 binds an ephemeral port
    std::optional<std::filesystem::path> ui_dir;  // built UI assets, mounted at /
};

/// JSON API under /api plus the no-cache workspace preview under /preview.
/// Mutations go through Project::execute (one at a time); reads use the last
/// published session.
class HttpService {
public:
    HttpService(Project& project, ServiceOptions options);
    ~HttpService();

    /// Binds the socket. PortInUse when the address is taken. Returns the port.
    int bind();

    /// Serves until stop(); call bind() first.
    void run();

    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace protoloop
