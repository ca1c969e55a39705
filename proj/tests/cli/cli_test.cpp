#include <gtest/gtest.h>

#include <httplib.h>
#include <json.hpp>

#include "stexify/service.hpp"
#include "support/fixtures.hpp"
#include "support/process.hpp"

using namespace stexify::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kLambda = data_path("lambda.grammar");

class Cli : public ::testing::Test {
protected:
    RunResult run(std::vector<std::string> args, const std::string& input = "") {
        return run_stexify(std::move(args), dir, input);
    }
    std::string demo() {
        std::string path = dir.file("demo-file.tex");
        write_file(path, read_file(data_path("demo-file.tex")));
        return path;
    }
    TempDir dir;
};

}  // namespace

TEST_F(Cli, VersionAndHelp) {
    auto r = run({"--version"});
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_EQ(r.out, std::string("stexify ") + STEXIFY_VERSION + "\n");
    r = run({"--help"});
    EXPECT_EQ(r.exit_code, 0);
    for (const char* sub : {"gen-grammar", "parse", "run", "serve"}) EXPECT_NE(r.out.find(sub), std::string::npos);
    EXPECT_EQ(run({}).exit_code, 1);
    EXPECT_EQ(run({"frobnicate"}).exit_code, 1);
}

TEST_F(Cli, ParseCountOnly) {
    auto r = run({"parse", "-g", kLambda, "--count-only", "xyzw"});
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_EQ(r.out, "5\n");
    r = run({"parse", "-g", kLambda, "--count-only", "--json", "xyzwv"});
    EXPECT_EQ(json::parse(r.out).at("count"), 14);
    r = run({"parse", "-g", kLambda, "--count-only", "x)"});
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_EQ(r.out, "0\n");
}

TEST_F(Cli, ParseSingleAndFailure) {
    auto r = run({"parse", "-g", kLambda, "x"});
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_EQ(r.out, "1 candidate\n[1] var x\n    \\var{x}\n");

    r = run({"parse", "-g", kLambda, "\\alpha"});
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_TRUE(r.out.empty());
    EXPECT_NE(r.err.find("at 0"), std::string::npos) << r.err;

    r = run({"parse", "-g", kLambda, "--json", "\\alpha"});
    EXPECT_EQ(r.exit_code, 1);
    auto j = json::parse(r.out);
    EXPECT_EQ(j.at("status"), "unparsed");
    EXPECT_EQ(j.at("error").at("position"), 0);

    r = run({"parse", "-g", kLambda, "--cap", "3", "xyzw"});
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_NE(r.err.find("5"), std::string::npos) << r.err;
}

TEST_F(Cli, ParseJsonBracketedIdentity) {
    auto r = run({"parse", "-g", kLambda, "--json", "(\\lambda x.x)"});
    ASSERT_EQ(r.exit_code, 0) << r.err;
    auto j = json::parse(r.out);
    ASSERT_EQ(j.at("candidates").size(), 1u);
    json var_x = {{"name", "var"}, {"lexeme", "x"}};
    json expected = {
        {"name", "dobrackets"},
        {"children", {{{"name", "abs"}, {"children", {{{"name", "varlist"}, {"children", {var_x}}}, var_x}}}}}};
    EXPECT_EQ(j.at("candidates")[0].at("ast"), expected);
    EXPECT_EQ(j.at("candidates")[0].at("preview"), "\\dobrackets{\\abs{\\var{x}}{\\var{x}}}");

    r = run({"parse", "-g", kLambda, "--dobrackets", "parens", "(\\lambda x.x)"});
    EXPECT_NE(r.out.find("(\\abs{\\var{x}}{\\var{x}})"), std::string::npos) << r.out;
}

TEST_F(Cli, ParseInputErrors) {
    EXPECT_EQ(run({"parse", "-g", dir.file("missing.grammar"), "x"}).exit_code, 1);
    EXPECT_EQ(run({"parse", "x"}).exit_code, 1);
    EXPECT_EQ(run({"parse", "-g", kLambda, "--dobrackets", "curly", "x"}).exit_code, 1);
    write_file(dir.file("bad.grammar"), "a: b;\nb: a;\n");
    auto r = run({"parse", "-g", dir.file("bad.grammar"), "x"});
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_NE(r.err.find("cycl"), std::string::npos) << r.err;
}

TEST_F(Cli, GenGrammarLambdaModule) {
    std::string out = dir.file("lcalc.grammar");
    auto r = run({"gen-grammar", data_path("lcalc.tex"), "-o", out});
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_TRUE(fs::exists(out));
    EXPECT_TRUE(fs::exists(dir.file("lcalc.actions.json")));
    EXPECT_NE(r.out.find("1 warning\n"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("unresolvable_template app"), std::string::npos) << r.out;

    for (const char* f : {"xyzw", "\\lambda xyz.xy", "(\\lambda xy.xy)", "y"}) {
        auto gen = run({"parse", "-g", out, "--count-only", f});
        auto hand = run({"parse", "-g", kLambda, "--count-only", f});
        EXPECT_EQ(gen.out, hand.out) << f;
    }
    auto fig = run({"parse", "-g", out, "(\\lambda x.x)"});
    EXPECT_NE(fig.out.find("\\dobrackets{\\abs{\\var{x}}{\\var{x}}}"), std::string::npos) << fig.out;

    auto j = run({"gen-grammar", "--json", data_path("lcalc.tex"), "-o", out});
    EXPECT_EQ(json::parse(j.out).at("warnings").size(), 1u);
}

TEST_F(Cli, GenGrammarWarningsAndErrors) {
    write_file(dir.file("pair.tex"), "\\symdef{pair}[args=2]{#1#2}\n");
    auto r = run({"gen-grammar", dir.file("pair.tex"), "-o", dir.file("pair.grammar")});
    EXPECT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find("1 warning\n"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("pair"), std::string::npos);

    r = run({"gen-grammar", dir.file("missing.tex"), "-o", dir.file("m.grammar")});
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_FALSE(fs::exists(dir.file("m.grammar")));

    write_file(dir.file("broken.tex"), "\n\\symdef{f}[args=1]{\\comp{f}#2}\n");
    r = run({"gen-grammar", dir.file("broken.tex"), "-o", dir.file("b.grammar")});
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_NE(r.err.find("broken.tex"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(dir.file("b.grammar")));
    EXPECT_FALSE(fs::exists(dir.file("b.actions.json")));

    EXPECT_EQ(run({"gen-grammar", data_path("lcalc.tex")}).exit_code, 1);
}

TEST_F(Cli, RunSkipAmbiguousGolden) {
    std::string doc = demo();
    auto r = run({"run", "-g", kLambda, doc, "--non-interactive", "--skip-ambiguous"});
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find("6 of 9 formulas replaced"), std::string::npos) << r.out;
    EXPECT_EQ(read_file(dir.file("demo-file.stexified.tex")), read_file(golden_path("demo-skip-ambiguous.tex")));
}

TEST_F(Cli, RunScriptedSelectionsGolden) {
    std::string doc = demo();
    // 1-based: abstraction body, left-associated application, abstraction body.
    auto r = run({"run", "-g", kLambda, doc, "-o", dir.file("out.tex")}, "2\n5\n2\n");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(read_file(dir.file("out.tex")), read_file(golden_path("demo-resolved.tex")));

    r = run({"run", "-g", kLambda, doc, "-o", dir.file("retry.tex")}, "zero\n7\n2\n5\n2\n");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.err.find("not a valid choice"), std::string::npos);
    EXPECT_EQ(read_file(dir.file("retry.tex")), read_file(golden_path("demo-resolved.tex")));

    r = run({"run", "-g", kLambda, doc, "-o", dir.file("skips.tex")}, "s\ns\ns\n");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(read_file(dir.file("skips.tex")), read_file(golden_path("demo-skip-ambiguous.tex")));
}

TEST_F(Cli, RunRefusals) {
    std::string doc = demo();
    auto r = run({"run", "-g", kLambda, doc, "--non-interactive"});
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_NE(r.err.find("0 4 5"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(dir.file("demo-file.stexified.tex")));

    r = run({"run", "-g", kLambda, doc}, "2\n");
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_FALSE(fs::exists(dir.file("demo-file.stexified.tex")));

    r = run({"run", "-g", kLambda, doc}, "q\n");
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_FALSE(fs::exists(dir.file("demo-file.stexified.tex")));

    r = run({"run", "-g", kLambda, doc, "--skip-ambiguous", "--dobrackets", "square"});
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_FALSE(fs::exists(dir.file("demo-file.stexified.tex")));

    EXPECT_EQ(run({"run", "-g", kLambda, dir.file("nope.tex")}).exit_code, 1);
    r = run({"run", "-g", kLambda, doc, "--skip-ambiguous", "-o", dir.file("no/such/dir/out.tex")});
    EXPECT_EQ(r.exit_code, 1);
}

TEST_F(Cli, RunEmptyDocumentAndJson) {
    write_file(dir.file("plain.tex"), "\\documentclass{article}\nNo formulas. 50% off.\n");
    auto r = run({"run", "-g", kLambda, dir.file("plain.tex"), "--non-interactive", "--json"});
    ASSERT_EQ(r.exit_code, 0) << r.err;
    auto j = json::parse(r.out);
    EXPECT_EQ(j.at("total"), 0);
    EXPECT_EQ(read_file(j.at("output_path")), read_file(dir.file("plain.tex")));

    write_file(dir.file("mixed.tex"), "$\\alpha$ and $(xy)$\n");
    r = run({"run", "-g", kLambda, dir.file("mixed.tex"), "--non-interactive", "--dobrackets", "parens"});
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(read_file(dir.file("mixed.stexified.tex")), "$\\alpha$ and $(\\app{\\var{x}}{\\var{y}})$\n");
    EXPECT_NE(r.err.find("unparsed formula 0"), std::string::npos) << r.err;
}

TEST_F(Cli, ServeOnAssignedPort) {
    std::string doc = demo();
    Child server({STEXIFY_BIN, "serve", "-g", kLambda, doc, "--port", "0", "--session-dir", dir.file("sessions"),
                  "--json"},
                 "", dir);
    std::string out = server.wait_for_output("\n", std::chrono::seconds(10));
    ASSERT_FALSE(out.empty());
    auto info = json::parse(out.substr(0, out.find('\n')));
    int port = info.at("port");
    EXPECT_GT(port, 0);
    EXPECT_EQ(info.at("url"), "http://127.0.0.1:" + std::to_string(port) + "/");
    std::string id = info.at("session_id");

    httplib::Client client("127.0.0.1", port);
    auto res = client.Get("/sessions/" + id + "/formulas");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(json::parse(res->body).at("formulas").size(), 9u);
    EXPECT_TRUE(fs::exists(dir.file("sessions/" + id + ".json")));

    server.signal(SIGTERM);
    EXPECT_EQ(server.wait().exit_code, 0);
}

TEST_F(Cli, ServePortInUse) {
    stexify::SessionStore store(dir.file("busy"));
    stexify::Service holder(store);
    auto port = holder.bind("127.0.0.1", 0);
    ASSERT_TRUE(port);
    auto r = run({"serve", "--port", std::to_string(*port), "--session-dir", dir.file("sessions")});
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_NE(r.err.find("cannot listen"), std::string::npos) << r.err;
}

TEST_F(Cli, ServeDefaultPort) {
    {
        stexify::SessionStore probe_store(dir.file("probe"));
        stexify::Service probe(probe_store);
        if (!probe.bind("127.0.0.1", 7770)) GTEST_SKIP() << "port 7770 busy on this machine";
    }
    Child server({STEXIFY_BIN, "serve", "--session-dir", dir.file("sessions")}, "", dir);
    std::string out = server.wait_for_output("\n", std::chrono::seconds(10));
    EXPECT_EQ(out, "serving on http://127.0.0.1:7770/\n");
    server.signal(SIGINT);
    EXPECT_EQ(server.wait().exit_code, 0);
}

TEST_F(Cli, ServeRejectsBadArguments) {
    EXPECT_EQ(run({"serve", "--port", "70000"}).exit_code, 1);
    std::string doc = demo();
    EXPECT_EQ(run({"serve", doc, "--port", "0", "--session-dir", dir.file("s")}).exit_code, 1);
    EXPECT_EQ(run({"serve", "--port", "0", "--static-dir", dir.file("nowhere")}).exit_code, 1);
}
