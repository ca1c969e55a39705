#include <gtest/gtest.h>

#include <httplib.h>

#include <thread>

#include "stexify/service.hpp"
#include "support/fixtures.hpp"

using namespace stexify;
using nlohmann::json;
using stexify::testing::data_path;
using stexify::testing::golden_path;
using stexify::testing::read_file;
using stexify::testing::TempDir;
using stexify::testing::write_file;

namespace {

class ServiceTest : public ::testing::Test {
protected:
    void SetUp() override {
        doc = docs.file("demo-file.tex");
        write_file(doc, read_file(data_path("demo-file.tex")));
        start();
    }

    void TearDown() override { shutdown(); }

    void start(ServiceConfig config = {}) {
        store = std::make_unique<SessionStore>(store_dir.path());
        service = std::make_unique<Service>(*store, std::move(config));
        auto bound = service->bind("127.0.0.1", 0);
        ASSERT_TRUE(bound.has_value());
        port = *bound;
        thread = std::thread([this] { service->run(); });
        service->wait_until_ready();
        client = std::make_unique<httplib::Client>("127.0.0.1", port);
    }

    void shutdown() {
        if (service) service->stop();
        if (thread.joinable()) thread.join();
        client.reset();
        service.reset();
        store.reset();
    }

    std::pair<int, json> post(const std::string& path, const json& body = json::object()) {
        auto res = client->Post(path, body.dump(), "application/json");
        if (!res) return {0, json()};
        return {res->status, json::parse(res->body)};
    }

    std::pair<int, json> get(const std::string& path) {
        auto res = client->Get(path);
        if (!res) return {0, json()};
        return {res->status, json::parse(res->body)};
    }

    std::string create_demo() {
        auto [status, body] = post("/sessions", {{"document_path", doc}, {"grammar_path", data_path("lambda.grammar")}});
        EXPECT_EQ(status, 201) << body.dump();
        return body.at("session_id").get<std::string>();
    }

    TempDir docs;
    TempDir store_dir;
    std::string doc;
    std::unique_ptr<SessionStore> store;
    std::unique_ptr<Service> service;
    std::unique_ptr<httplib::Client> client;
    std::thread thread;
    int port = 0;
};

void expect_error(const std::pair<int, json>& r, int status, const std::string& code) {
    EXPECT_EQ(r.first, status) << r.second.dump();
    ASSERT_TRUE(r.second.contains("error")) << r.second.dump();
    EXPECT_EQ(r.second["error"]["code"], code);
    EXPECT_TRUE(r.second["error"]["message"].is_string());
}

}  // namespace

TEST(ServiceStatus, CodeMapping) {
    EXPECT_EQ(http_status_for("unknown_session"), 404);
    EXPECT_EQ(http_status_for("unknown_formula"), 404);
    EXPECT_EQ(http_status_for("pending_ambiguities"), 409);
    EXPECT_EQ(http_status_for("document_modified"), 409);
    EXPECT_EQ(http_status_for("bad_index"), 400);
    EXPECT_EQ(http_status_for("io_error"), 400);
    EXPECT_EQ(http_status_for("internal"), 500);
    EXPECT_EQ(error_body("x", "y"), json::parse(R"({"error":{"code":"x","message":"y"}})"));
}

TEST_F(ServiceTest, CreateReturnsSummary) {
    auto [status, body] = post("/sessions", {{"document_path", doc}, {"grammar_path", data_path("lambda.grammar")}});
    ASSERT_EQ(status, 201);
    std::string id = body.at("session_id");
    EXPECT_EQ(body.at("summary").at("total"), 9);
    EXPECT_EQ(body.at("summary").at("counts").at("ambiguous"), 3);
    EXPECT_TRUE(std::filesystem::exists(store->autosave_path(id)));

    auto [s2, summary] = get("/sessions/" + id);
    EXPECT_EQ(s2, 200);
    EXPECT_EQ(summary, body.at("summary"));

    auto [s3, list] = get("/sessions");
    EXPECT_EQ(s3, 200);
    ASSERT_EQ(list.at("sessions").size(), 1u);
    EXPECT_EQ(list.at("sessions")[0].at("session_id"), id);
}

TEST_F(ServiceTest, FormulaListAndDetail) {
    auto id = create_demo();
    auto [status, list] = get("/sessions/" + id + "/formulas");
    ASSERT_EQ(status, 200);
    const auto& formulas = list.at("formulas");
    ASSERT_EQ(formulas.size(), 9u);
    std::vector<int> counts;
    for (std::size_t i = 0; i < formulas.size(); ++i) {
        EXPECT_EQ(formulas[i].at("id"), i);
        for (const char* key : {"raw", "kind", "status", "candidate_count"}) EXPECT_TRUE(formulas[i].contains(key));
        counts.push_back(formulas[i].at("candidate_count"));
    }
    EXPECT_EQ(counts, (std::vector<int>{2, 1, 1, 1, 5, 2, 1, 1, 1}));

    auto [s2, detail] = get("/sessions/" + id + "/formulas/5");
    ASSERT_EQ(s2, 200);
    EXPECT_EQ(detail.at("raw"), "(\\lambda xy.xy)");
    ASSERT_EQ(detail.at("candidates").size(), 2u);
    Session snap = store->snapshot(id);
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& c = detail.at("candidates")[i];
        EXPECT_EQ(c.at("index"), i);
        EXPECT_EQ(c.at("ast"), ast_to_json(snap.entries[5].candidates[i].ast));
        EXPECT_EQ(c.at("preview"), emit(snap.entries[5].candidates[i].ast));
    }
}

TEST_F(ServiceTest, SelectionSkipAndExport) {
    auto id = create_demo();
    expect_error(post("/sessions/" + id + "/export"), 409, "pending_ambiguities");
    auto pending = post("/sessions/" + id + "/export").second;
    EXPECT_EQ(pending["error"]["pending"], json({0, 4, 5}));

    auto [s1, entry] = post("/sessions/" + id + "/formulas/4/selection", {{"index", 4}});
    ASSERT_EQ(s1, 200);
    EXPECT_EQ(entry.at("status"), "resolved");
    EXPECT_EQ(entry.at("choice"), 4);
    EXPECT_EQ(entry.at("candidates")[4].at("preview"), "\\app{\\app{\\app{\\var{x}}{\\var{y}}}{\\var{z}}}{\\var{w}}");

    EXPECT_EQ(post("/sessions/" + id + "/formulas/0/selection", {{"index", 1}}).first, 200);
    EXPECT_EQ(post("/sessions/" + id + "/formulas/5/selection", {{"index", 1}}).first, 200);
    EXPECT_EQ(get("/sessions/" + id + "/formulas/4").second.at("status"), "resolved");

    auto [s2, out] = post("/sessions/" + id + "/export", {{"output_path", docs.file("resolved.tex")}});
    ASSERT_EQ(s2, 200) << out.dump();
    EXPECT_EQ(out.at("output_path"), docs.file("resolved.tex"));
    EXPECT_EQ(read_file(docs.file("resolved.tex")), read_file(golden_path("demo-resolved.tex")));

    auto [s3, skipped] = post("/sessions/" + id + "/formulas/0/skip");
    EXPECT_EQ(s3, 200);
    EXPECT_EQ(skipped.at("status"), "skipped");
    auto [s4, def] = post("/sessions/" + id + "/export", {{"dobrackets_style", "parens"}});
    ASSERT_EQ(s4, 200) << def.dump();
    EXPECT_EQ(def.at("output_path"), docs.file("demo-file.stexified.tex"));
    EXPECT_NE(read_file(docs.file("demo-file.stexified.tex")).find("$\\lambda xyz.xy$"), std::string::npos);
}

TEST_F(ServiceTest, Errors) {
    auto id = create_demo();
    expect_error(get("/sessions/0123abcd"), 404, "unknown_session");
    expect_error(get("/sessions/" + id + "/formulas/9"), 404, "unknown_formula");
    expect_error(get("/sessions/" + id + "/formulas/99999999999999999999999"), 404, "unknown_formula");
    expect_error(post("/sessions/" + id + "/formulas/4/selection", {{"index", 5}}), 400, "bad_index");
    expect_error(post("/sessions/" + id + "/formulas/4/selection", {{"index", -1}}), 400, "bad_request");
    expect_error(post("/sessions/" + id + "/formulas/4/selection", {{"index", "two"}}), 400, "bad_request");
    expect_error(post("/sessions/" + id + "/formulas/4/selection"), 400, "bad_request");
    expect_error(post("/sessions/" + id + "/formulas/4/skip", json::array()), 400, "bad_request");
    expect_error(post("/sessions", {{"document_path", doc}}), 400, "bad_request");
    expect_error(post("/sessions", {{"document_path", docs.file("missing.tex")},
                                    {"grammar_path", data_path("lambda.grammar")}}),
                 400, "io_error");
    expect_error(post("/sessions/" + id + "/export", {{"dobrackets_style", "curly"}}), 400, "invalid_argument");
    expect_error(get("/nowhere"), 404, "not_found");

    auto raw = client->Post("/sessions", "{not json", "application/json");
    ASSERT_TRUE(raw);
    EXPECT_EQ(raw->status, 400);

    for (auto fid : {0, 4, 5}) post("/sessions/" + id + "/formulas/" + std::to_string(fid) + "/skip");
    auto later = std::filesystem::last_write_time(doc) + std::chrono::seconds(5);
    std::filesystem::last_write_time(doc, later);
    expect_error(post("/sessions/" + id + "/export"), 409, "document_modified");
}

TEST_F(ServiceTest, RestartRestoresState) {
    auto id = create_demo();
    post("/sessions/" + id + "/formulas/4/selection", {{"index", 2}});
    post("/sessions/" + id + "/formulas/0/skip");
    auto before = get("/sessions/" + id + "/formulas").second;
    shutdown();
    start();
    auto [status, after] = get("/sessions/" + id + "/formulas");
    EXPECT_EQ(status, 200);
    EXPECT_EQ(after, before);
    EXPECT_EQ(get("/sessions/" + id + "/formulas/4").second.at("choice"), 2);
}

TEST_F(ServiceTest, PlaceholderAndStaticFiles) {
    auto res = client->Get("/");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_NE(res->body.find("/sessions"), std::string::npos);

    TempDir assets;
    write_file(assets.file("index.html"), "<p>ui</p>");
    shutdown();
    ServiceConfig config;
    config.static_dir = assets.path().string();
    start(config);
    res = client->Get("/index.html");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->body, "<p>ui</p>");
    res = client->Get("/");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->body, "<p>ui</p>");
    EXPECT_EQ(get("/sessions").first, 200);
}

TEST_F(ServiceTest, ConcurrentClients) {
    auto id = create_demo();
    std::vector<std::thread> threads;
    for (int t = 0; t < 6; ++t)
        threads.emplace_back([&, t] {
            httplib::Client c("127.0.0.1", port);
            for (int k = 0; k < 10; ++k) {
                json body{{"index", (t + k) % 5}};
                auto r = c.Post("/sessions/" + id + "/formulas/4/selection", body.dump(), "application/json");
                ASSERT_TRUE(r);
                EXPECT_EQ(r->status, 200);
                auto g = c.Get("/sessions/" + id + "/formulas/4");
                ASSERT_TRUE(g);
                EXPECT_EQ(json::parse(g->body).at("status"), "resolved");
            }
        });
    for (auto& t : threads) t.join();
    EXPECT_EQ(SessionStore(store_dir.path()).snapshot(id), store->snapshot(id));
}

TEST(ServiceBind, PortInUse) {
    TempDir dir;
    SessionStore store(dir.path());
    Service first(store);
    auto port = first.bind("127.0.0.1", 0);
    ASSERT_TRUE(port);
    Service second(store);
    EXPECT_FALSE(second.bind("127.0.0.1", *port).has_value());
}

TEST(ServiceBind, UnusedBindReleasesPort) {
    TempDir dir;
    SessionStore store(dir.path());
    int port = 0;
    {
        Service first(store);
        auto bound = first.bind("127.0.0.1", 0);
        ASSERT_TRUE(bound);
        port = *bound;
    }
    Service second(store);
    EXPECT_EQ(second.bind("127.0.0.1", port), std::optional<int>(port));
}
