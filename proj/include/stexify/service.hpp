#pragma once

#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "stexify/session.hpp"

namespace stexify {

struct ServiceConfig {
    std::optional<std::string> static_dir;  // served at `/`; a placeholder page otherwise
    SessionOptions session_defaults;
};

/// HTTP status for an error code of the library.
int http_status_for(const std::string& code);

/// `{"error": {"code": ..., "message": ...}}`
nlohmann::json error_body(const std::string& code, const std::string& message);

/// JSON API over a SessionStore. All handlers run on the server's worker
/// threads; the store provides per-session exclusion.
class Service {
public:
    Service(SessionStore& store, ServiceConfig config = {});
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds to `host:port`; port 0 picks a free port. Returns the bound port,
    /// or nothing when the address is unavailable.
    std::optional<int> bind(const std::string& host, int port);

    /// Serves until stop(). Requires a successful bind().
    void run();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace stexify
