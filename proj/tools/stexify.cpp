// stexify command-line entry point.

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <csignal>
#include <iostream>
#include <thread>

#include "stexify/gen.hpp"
#include "stexify/service.hpp"
#include "stexify/session.hpp"

using namespace stexify;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kUserError = 1;
constexpr int kInternalError = 2;

// A user-facing failure whose message has already been printed.
struct Reported {
    int code;
};

std::string warning_kind(GenWarning::Kind k) {
    switch (k) {
    case GenWarning::Kind::UnresolvableTemplate: return "unresolvable_template";
    case GenWarning::Kind::UnusedArgument: return "unused_argument";
    case GenWarning::Kind::EmptyTemplate: return "empty_template";
    case GenWarning::Kind::DuplicateAtom: return "duplicate_atom";
    }
    return "warning";
}

std::string caret_line(const std::string& text, std::size_t position) {
    return "  " + text + "\n  " + std::string(std::min(position, text.size()), ' ') + "^";
}

// ---- gen-grammar -----------------------------------------------------------

struct GenArgs {
    std::vector<std::string> inputs;
    std::string output;
    bool json = false;
};

int cmd_gen_grammar(const GenArgs& a) {
    ScanResult all;
    for (const auto& path : a.inputs) {
        try {
            merge_scan(all, scan_stex_source(read_text_file(path)));
        } catch (const MalformedDeclaration& e) {
            throw Error(e.code(), path + ": " + e.what());
        }
    }
    GeneratedGrammar gen = generate_grammar(all.specs, {}, all.modules);
    std::string sidecar = sidecar_path_for(a.output);
    write_file_atomically(a.output, gen.text);
    write_file_atomically(sidecar, actions_to_json(gen.actions).dump(2) + "\n");

    if (a.json) {
        json warnings = json::array();
        for (const auto& w : gen.warnings)
            warnings.push_back({{"kind", warning_kind(w.kind)}, {"macro", w.macro}, {"message", w.message}});
        std::cout << json{{"grammar_path", a.output},
                          {"actions_path", sidecar},
                          {"macros", all.specs.size()},
                          {"modules", all.modules},
                          {"warnings", warnings}}
                         .dump(2)
                  << "\n";
        return kOk;
    }
    std::cout << "wrote " << a.output << " (" << all.specs.size() << " macros)\n";
    std::cout << "wrote " << sidecar << "\n";
    std::cout << gen.warnings.size() << (gen.warnings.size() == 1 ? " warning" : " warnings") << "\n";
    for (const auto& w : gen.warnings)
        std::cout << "  " << warning_kind(w.kind) << " " << w.macro << ": " << w.message << "\n";
    if (!gen.warnings.empty()) std::cout << "Edit the grammar by hand for the macros listed above.\n";
    return kOk;
}

// ---- parse -----------------------------------------------------------------

struct ParseArgs {
    std::string grammar;
    std::string formula;
    std::optional<std::string> actions;
    bool count_only = false;
    bool json = false;
    std::size_t cap = kDefaultEnumerationCap;
    std::string dobrackets = "macro";
};

int cmd_parse(const ParseArgs& a) {
    EmitterConfig emitter;
    emitter.dobrackets_style = parse_dobrackets_style(a.dobrackets);
    Pipeline pipeline = load_pipeline(a.grammar, a.actions);

    if (a.count_only) {
        ParseForest forest = parse(pipeline.compiled, a.formula, pipeline.registry);
        std::uint64_t n = count_trees(forest);
        if (a.json) {
            json j{{"formula", a.formula}, {"count", n}, {"saturated", n == kCountSaturated}};
            std::cout << j.dump(2) << "\n";
        } else {
            std::cout << n << (n == kCountSaturated ? "+" : "") << "\n";
        }
        return n ? kOk : kUserError;
    }

    FormulaSpan span;
    span.raw = a.formula;
    span.inner = {0, a.formula.size()};
    span.outer = span.inner;
    FormulaEntry e = analyse_formula(pipeline, span, emitter, a.cap);

    if (a.json) {
        json j{{"formula", a.formula}, {"status", to_string(e.status)}};
        if (e.status == FormulaStatus::Unparsed) {
            j["error"] = {{"code", "no_parse"}, {"message", e.reason}};
            j["error"]["position"] = e.position ? json(*e.position) : json(nullptr);
        } else {
            j["candidates"] = json::array();
            for (std::size_t i = 0; i < e.candidates.size(); ++i)
                j["candidates"].push_back({{"index", i},
                                           {"ast", ast_to_json(e.candidates[i].ast)},
                                           {"preview", e.candidates[i].preview}});
        }
        std::cout << j.dump(2) << "\n";
        return e.status == FormulaStatus::Unparsed ? kUserError : kOk;
    }
    if (e.status == FormulaStatus::Unparsed) {
        std::cerr << "error: " << e.reason << "\n";
        if (e.position) std::cerr << caret_line(a.formula, *e.position) << "\n";
        return kUserError;
    }
    std::cout << e.candidates.size() << (e.candidates.size() == 1 ? " candidate" : " candidates") << "\n";
    for (std::size_t i = 0; i < e.candidates.size(); ++i) {
        std::cout << "[" << i + 1 << "] " << ast_to_string(e.candidates[i].ast) << "\n";
        std::cout << "    " << e.candidates[i].preview << "\n";
    }
    return kOk;
}

// ---- run -------------------------------------------------------------------

struct RunArgs {
    std::string grammar;
    std::string document;
    std::optional<std::string> output;
    std::optional<std::string> actions;
    bool non_interactive = false;
    bool skip_ambiguous = false;
    std::string dobrackets = "macro";
    std::size_t cap = kDefaultEnumerationCap;
    bool json = false;
};

// Returns false when the user aborted or input ran out.
bool prompt_choices(Session& s, std::istream& in, std::ostream& out) {
    auto pending = pending_ambiguities(s);
    for (std::size_t n = 0; n < pending.size(); ++n) {
        auto& e = find_entry(s, pending[n]);
        out << "\nformula " << e.formula.id << " (" << n + 1 << "/" << pending.size() << "): " << e.formula.raw
            << "\n";
        for (std::size_t i = 0; i < e.candidates.size(); ++i) {
            out << "  [" << i + 1 << "] " << e.candidates[i].preview << "\n";
            out << "      " << ast_to_string(e.candidates[i].ast) << "\n";
        }
        for (;;) {
            out << "choice [1-" << e.candidates.size() << ", s = skip, q = quit]: " << std::flush;
            std::string line;
            if (!std::getline(in, line)) {
                out << "\n";
                return false;
            }
            line.erase(0, line.find_first_not_of(" \t\r"));
            line.erase(line.find_last_not_of(" \t\r") + 1);
            if (line == "q") return false;
            if (line == "s") {
                skip(s, e.formula.id);
                break;
            }
            std::size_t pick = 0;
            auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), pick);
            if (ec == std::errc() && ptr == line.data() + line.size() && pick >= 1 && pick <= e.candidates.size()) {
                select(s, e.formula.id, pick - 1);
                break;
            }
            out << "not a valid choice: '" << line << "'\n";
        }
    }
    return true;
}

int cmd_run(const RunArgs& a) {
    SessionOptions options;
    options.actions_path = a.actions;
    options.dobrackets_style = parse_dobrackets_style(a.dobrackets);
    options.enumeration_cap = a.cap;
    Session s = create_session(a.document, a.grammar, options);

    if (a.non_interactive || a.skip_ambiguous) {
        auto pending = pending_ambiguities(s);
        if (!pending.empty() && !a.skip_ambiguous) {
            std::cerr << "error: " << pending.size() << " ambiguous formulas need a choice:";
            for (auto id : pending) std::cerr << " " << id;
            std::cerr << "\n(rerun interactively, or pass --skip-ambiguous)\n";
            throw Reported{kUserError};
        }
        for (auto id : pending) skip(s, id);
    } else if (!prompt_choices(s, std::cin, std::cerr)) {
        std::cerr << "aborted; nothing written\n";
        throw Reported{kUserError};
    }

    std::string path = export_session(s, std::nullopt, a.output);
    std::map<std::string, int> counts;
    for (const auto& e : s.entries) counts[to_string(e.status)]++;
    int replaced = counts["unambiguous"] + counts["resolved"];
    if (a.json) {
        json j{{"output_path", path}, {"replaced", replaced}, {"skipped", counts["skipped"]},
               {"unparsed", counts["unparsed"]}, {"total", s.entries.size()}};
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "wrote " << path << " (" << replaced << " of " << s.entries.size() << " formulas replaced, "
                  << counts["skipped"] << " skipped, " << counts["unparsed"] << " unparsed)\n";
        for (const auto& e : s.entries)
            if (e.status == FormulaStatus::Unparsed)
                std::cerr << "unparsed formula " << e.formula.id << ": " << e.formula.raw << ": " << e.reason << "\n";
    }
    return kOk;
}

// ---- serve -----------------------------------------------------------------

struct ServeArgs {
    std::optional<std::string> grammar;
    std::optional<std::string> document;
    std::optional<std::string> actions;
    std::string host = "127.0.0.1";
    int port = 7770;
    std::string session_dir = ".stexify-sessions";
    std::optional<std::string> static_dir;
    std::string dobrackets = "macro";
    bool json = false;
};

int cmd_serve(const ServeArgs& a) {
    if (a.document && !a.grammar) throw Error("invalid_argument", "a document needs --grammar");
    ServiceConfig config;
    config.static_dir = a.static_dir;
    config.session_defaults.dobrackets_style = parse_dobrackets_style(a.dobrackets);
    if (a.static_dir && !std::filesystem::is_directory(*a.static_dir))
        throw Error("invalid_argument", "static directory not found: " + *a.static_dir);

    // Signals go to the waiter thread only.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    SessionStore store(a.session_dir);
    std::optional<std::string> session_id;
    if (a.document) {
        SessionOptions options = config.session_defaults;
        options.actions_path = a.actions;
        session_id = store.create(*a.document, *a.grammar, options);
    }

    Service service(store, config);
    auto port = service.bind(a.host, a.port);
    if (!port) {
        std::cerr << "error: cannot listen on " << a.host << ":" << a.port << " (address in use?)\n";
        throw Reported{kUserError};
    }
    std::string url = "http://" + a.host + ":" + std::to_string(*port) + "/";
    if (a.json) {
        json j{{"url", url}, {"port", *port}};
        j["session_id"] = session_id ? json(*session_id) : json(nullptr);
        std::cout << j.dump() << std::endl;
    } else {
        std::cout << "serving on " << url << std::endl;
        if (session_id) std::cout << "session " << *session_id << ": " << url << "sessions/" << *session_id << std::endl;
    }

    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        service.stop();
    });
    service.run();
    // run() also returns on internal failure; wake the waiter either way.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Turn the formulas of a LaTeX document into semantic macro markup."};
    app.name("stexify");
    app.set_version_flag("--version", "stexify " STEXIFY_VERSION);
    app.require_subcommand(1);

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-grammar", "Generate a grammar and action sidecar from sTeX macro declarations");
    gen_cmd->add_option("inputs", gen.inputs, "sTeX source files")->required()->check(CLI::ExistingFile);
    gen_cmd->add_option("-o,--output", gen.output, "Grammar file to write (sidecar goes next to it)")->required();
    gen_cmd->add_flag("--json", gen.json, "Print the report as JSON");

    ParseArgs parse_args;
    auto* parse_cmd = app.add_subcommand("parse", "Parse one formula and print its readings");
    parse_cmd->add_option("-g,--grammar", parse_args.grammar, "Grammar file")->required()->check(CLI::ExistingFile);
    parse_cmd->add_option("formula", parse_args.formula, "Formula text (without math delimiters)")->required();
    parse_cmd->add_option("--actions", parse_args.actions, "Action sidecar (default: next to the grammar)")
        ->check(CLI::ExistingFile);
    parse_cmd->add_flag("--count-only", parse_args.count_only, "Print only the number of parse trees");
    parse_cmd->add_flag("--json", parse_args.json, "Print JSON");
    parse_cmd->add_option("--cap", parse_args.cap, "Most parse trees to enumerate")->check(CLI::PositiveNumber);
    parse_cmd->add_option("--dobrackets", parse_args.dobrackets, "Parenthesis rendering")
        ->check(CLI::IsMember({"macro", "parens"}));

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Rewrite every formula of a document");
    run_cmd->add_option("-g,--grammar", run.grammar, "Grammar file")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("document", run.document, "LaTeX document")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("-o,--output", run.output, "Output file (default: <stem>.stexified.tex)");
    run_cmd->add_option("--actions", run.actions, "Action sidecar")->check(CLI::ExistingFile);
    run_cmd->add_flag("--non-interactive", run.non_interactive, "Never prompt; fail on ambiguous formulas");
    run_cmd->add_flag("--skip-ambiguous", run.skip_ambiguous, "Leave ambiguous formulas unchanged");
    run_cmd->add_option("--dobrackets", run.dobrackets, "Parenthesis rendering")
        ->check(CLI::IsMember({"macro", "parens"}));
    run_cmd->add_option("--cap", run.cap, "Most parse trees per formula")->check(CLI::PositiveNumber);
    run_cmd->add_flag("--json", run.json, "Print the summary as JSON");

    ServeArgs serve;
    auto* serve_cmd = app.add_subcommand("serve", "Serve the disambiguation API");
    serve_cmd->add_option("-g,--grammar", serve.grammar, "Grammar for the initial session")->check(CLI::ExistingFile);
    serve_cmd->add_option("document", serve.document, "Document for the initial session")->check(CLI::ExistingFile);
    serve_cmd->add_option("--actions", serve.actions, "Action sidecar")->check(CLI::ExistingFile);
    serve_cmd->add_option("--host", serve.host, "Address to bind");
    serve_cmd->add_option("--port", serve.port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--session-dir", serve.session_dir, "Where sessions are autosaved");
    serve_cmd->add_option("--static-dir", serve.static_dir, "UI assets served at /");
    serve_cmd->add_option("--dobrackets", serve.dobrackets, "Default parenthesis rendering")
        ->check(CLI::IsMember({"macro", "parens"}));
    serve_cmd->add_flag("--json", serve.json, "Print the listening address as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kUserError;
    }

    try {
        if (*gen_cmd) return cmd_gen_grammar(gen);
        if (*parse_cmd) return cmd_parse(parse_args);
        if (*run_cmd) return cmd_run(run);
        if (*serve_cmd) return cmd_serve(serve);
    } catch (const Reported& r) {
        return r.code;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUserError;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternalError;
    }
    return kInternalError;
}
