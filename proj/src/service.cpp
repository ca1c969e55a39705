#include "stexify/service.hpp"

#include <httplib.h>

#include <atomic>
#include <thread>

namespace stexify {

using nlohmann::json;

namespace {

class BadRequest : public Error {
public:
    explicit BadRequest(const std::string& message) : Error("bad_request", message) {}
};

const char* kPlaceholderPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>stexify</title></head>
<body>
<h1>stexify</h1>
<p>No UI assets configured (start with <code>--static-dir</code>). The JSON API is available:</p>
<ul>
<li><code>POST /sessions</code></li>
<li><code>GET /sessions</code>, <code>GET /sessions/{id}</code></li>
<li><code>GET /sessions/{id}/formulas</code>, <code>GET /sessions/{id}/formulas/{fid}</code></li>
<li><code>POST /sessions/{id}/formulas/{fid}/selection</code>, <code>POST /sessions/{id}/formulas/{fid}/skip</code></li>
<li><code>POST /sessions/{id}/export</code></li>
</ul>
</body></html>
)";

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) throw BadRequest("request body must be a JSON object");
    return body;
}

template <typename T>
std::optional<T> optional_field(const json& body, const char* name) {
    auto it = body.find(name);
    if (it == body.end() || it->is_null()) return std::nullopt;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw BadRequest(std::string("field '") + name + "' has the wrong type");
    }
}

template <typename T>
T required_field(const json& body, const char* name) {
    auto v = optional_field<T>(body, name);
    if (!v) throw BadRequest(std::string("missing field '") + name + "'");
    return *v;
}

std::size_t formula_id(const std::string& text) {
    try {
        return std::stoull(text);
    } catch (const std::exception&) {
        throw UnknownFormula(std::numeric_limits<std::size_t>::max());
    }
}

void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

Handler guarded(Handler inner) {
    return [inner = std::move(inner)](const httplib::Request& req, httplib::Response& res) {
        try {
            inner(req, res);
        } catch (const PendingAmbiguities& e) {
            json body = error_body(e.code(), e.what());
            body["error"]["pending"] = e.ids();
            send(res, http_status_for(e.code()), body);
        } catch (const Error& e) {
            send(res, http_status_for(e.code()), error_body(e.code(), e.what()));
        } catch (const std::exception& e) {
            send(res, 500, error_body("internal", e.what()));
        }
    };
}

}  // namespace

int http_status_for(const std::string& code) {
    if (code == "unknown_session" || code == "unknown_formula" || code == "not_found") return 404;
    if (code == "pending_ambiguities" || code == "document_modified") return 409;
    if (code == "internal") return 500;
    return 400;
}

json error_body(const std::string& code, const std::string& message) {
    return {{"error", {{"code", code}, {"message", message}}}};
}

struct Service::Impl {
    SessionStore& store;
    ServiceConfig config;
    httplib::Server server;
    bool bound = false;
    std::atomic<bool> ran{false};

    Impl(SessionStore& s, ServiceConfig c) : store(s), config(std::move(c)) {
        // httplib's default adds SO_REUSEPORT, which would let a second server share a busy port.
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
        });
        routes();
    }

    void routes() {
        const std::string sid = "([0-9a-f]+)";
        const std::string fid = "([0-9]+)";

        server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
            json body = parse_body(req);
            SessionOptions options = config.session_defaults;
            if (auto a = optional_field<std::string>(body, "actions_path")) options.actions_path = a;
            if (auto d = optional_field<std::string>(body, "dobrackets_style"))
                options.dobrackets_style = parse_dobrackets_style(*d);
            std::string id = store.create(required_field<std::string>(body, "document_path"),
                                          required_field<std::string>(body, "grammar_path"), options);
            send(res, 201, {{"session_id", id}, {"summary", session_summary(store.snapshot(id))}});
        }));

        server.Get("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
            json list = json::array();
            for (const auto& id : store.ids()) list.push_back(session_summary(store.snapshot(id)));
            send(res, 200, {{"sessions", list}});
        }));

        server.Get("/sessions/" + sid, guarded([this](const httplib::Request& req, httplib::Response& res) {
            send(res, 200, session_summary(store.snapshot(req.matches[1])));
        }));

        server.Get("/sessions/" + sid + "/formulas",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       Session s = store.snapshot(req.matches[1]);
                       json list = json::array();
                       for (const auto& e : s.entries) list.push_back(entry_summary(e));
                       send(res, 200, {{"formulas", list}});
                   }));

        server.Get("/sessions/" + sid + "/formulas/" + fid,
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       Session s = store.snapshot(req.matches[1]);
                       send(res, 200, entry_detail(find_entry(s, formula_id(req.matches[2]))));
                   }));

        server.Post("/sessions/" + sid + "/formulas/" + fid + "/selection",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        json body = parse_body(req);
                        auto index = required_field<std::int64_t>(body, "index");
                        if (index < 0) throw BadRequest("index must be non-negative");
                        auto e = store.select(req.matches[1], formula_id(req.matches[2]),
                                              static_cast<std::size_t>(index));
                        send(res, 200, entry_detail(e));
                    }));

        server.Post("/sessions/" + sid + "/formulas/" + fid + "/skip",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        parse_body(req);
                        send(res, 200, entry_detail(store.skip(req.matches[1], formula_id(req.matches[2]))));
                    }));

        server.Post("/sessions/" + sid + "/export",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        json body = parse_body(req);
                        std::optional<DobracketsStyle> style;
                        if (auto d = optional_field<std::string>(body, "dobrackets_style"))
                            style = parse_dobrackets_style(*d);
                        auto path = store.export_session(req.matches[1], style,
                                                         optional_field<std::string>(body, "output_path"));
                        send(res, 200, {{"output_path", path}});
                    }));

        bool mounted = config.static_dir && server.set_mount_point("/", *config.static_dir);
        if (!mounted)
            server.Get("/", [](const httplib::Request&, httplib::Response& res) {
                res.set_content(kPlaceholderPage, "text/html; charset=utf-8");
            });

        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.status == 404 && res.body.empty())
                send(res, 404, error_body("not_found", "no such resource"));
        });
    }
};

Service::Service(SessionStore& store, ServiceConfig config)
    : impl_(std::make_unique<Impl>(store, std::move(config))) {}

Service::~Service() {
    if (impl_->bound && !impl_->ran) {
        // httplib closes the listening socket only from a running server.
        std::thread closer([this] { run(); });
        impl_->server.wait_until_ready();
        impl_->server.stop();
        closer.join();
        return;
    }
    stop();
}

std::optional<int> Service::bind(const std::string& host, int port) {
    if (port == 0) {
        int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) return std::nullopt;
        impl_->bound = true;
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) return std::nullopt;
    impl_->bound = true;
    return port;
}

void Service::run() {
    impl_->ran = true;
    impl_->server.listen_after_bind();
}

void Service::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
}

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace stexify
