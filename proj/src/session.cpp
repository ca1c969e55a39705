#include "stexify/session.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <random>
#include <thread>

namespace stexify {

using nlohmann::json;

namespace {

const std::vector<std::pair<FormulaStatus, std::string>> kStatusNames = {
    {FormulaStatus::Unparsed, "unparsed"},   {FormulaStatus::Unambiguous, "unambiguous"},
    {FormulaStatus::Ambiguous, "ambiguous"}, {FormulaStatus::Resolved, "resolved"},
    {FormulaStatus::Skipped, "skipped"}};

std::string now_iso8601() {
    auto now = std::chrono::system_clock::now();
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[48];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
    return out;
}

std::string random_id() {
    static std::mutex m;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lock(m);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
    return buf;
}

EmitterConfig emitter_for(DobracketsStyle style) {
    EmitterConfig c;
    c.dobrackets_style = style;
    return c;
}

}  // namespace

std::string to_string(FormulaStatus status) {
    for (const auto& [s, name] : kStatusNames)
        if (s == status) return name;
    return "";
}

FormulaStatus formula_status_from_string(const std::string& text) {
    for (const auto& [s, name] : kStatusNames)
        if (name == text) return s;
    throw Error("invalid_session", "unknown formula status '" + text + "'");
}

PendingAmbiguities::PendingAmbiguities(std::vector<std::size_t> ids)
    : Error("pending_ambiguities",
            [&] {
                std::string m = "formulas still ambiguous:";
                for (auto id : ids) m += " " + std::to_string(id);
                return m;
            }()),
      ids_(std::move(ids)) {}

std::int64_t file_mtime(const std::string& path) {
    std::error_code ec;
    auto t = std::filesystem::last_write_time(path, ec);
    if (ec) throw Error("io_error", "cannot stat " + path + ": " + ec.message());
    return std::chrono::duration_cast<std::chrono::nanoseconds>(t.time_since_epoch()).count();
}

Pipeline load_pipeline(const std::string& grammar_path, const std::optional<std::string>& actions_path) {
    Grammar grammar = load_grammar_file(grammar_path);
    Pipeline p{compile(grammar), {}, RecognizerRegistry::with_builtins(), {}};
    Scanner probe(p.grammar(), p.registry);  // surfaces unknown recognizers up front
    if (actions_path) {
        p.actions_path = *actions_path;
    } else if (std::filesystem::exists(sidecar_path_for(grammar_path))) {
        p.actions_path = sidecar_path_for(grammar_path);
    }
    p.actions = p.actions_path.empty() ? default_actions(p.grammar()) : load_actions(p.grammar(), p.actions_path);
    return p;
}

FormulaEntry analyse_formula(const Pipeline& pipeline, const FormulaSpan& formula, const EmitterConfig& emitter,
                             std::size_t cap) {
    FormulaEntry e;
    e.formula = formula;
    ParseForest forest = parse(pipeline.compiled, formula.raw, pipeline.registry);
    if (forest.empty()) {
        e.status = FormulaStatus::Unparsed;
        e.reason = forest.failure() ? forest.failure()->describe() : "no parse";
        if (forest.failure()) e.position = forest.failure()->position;
        return e;
    }
    try {
        auto trees = enumerate_trees(forest, cap);
        for (std::size_t i = 0; i < trees.size(); ++i) {
            AstNode ast = build_ast(pipeline.grammar(), trees[i], pipeline.actions);
            bool seen = std::any_of(e.candidates.begin(), e.candidates.end(),
                                    [&](const Candidate& c) { return c.ast == ast; });
            if (seen) continue;
            std::string preview = emit(ast, emitter);
            e.candidates.push_back({i, std::move(ast), std::move(preview)});
        }
    } catch (const Error& err) {
        e.status = FormulaStatus::Unparsed;
        e.reason = err.what();
        e.candidates.clear();
        return e;
    }
    if (e.candidates.size() == 1) {
        e.status = FormulaStatus::Unambiguous;
        e.choice = 0;
    } else {
        e.status = FormulaStatus::Ambiguous;
    }
    return e;
}

Session create_session(const std::string& document_path, const std::string& grammar_path,
                       const SessionOptions& options) {
    Pipeline pipeline = load_pipeline(grammar_path, options.actions_path);
    const std::string& actions_path = pipeline.actions_path;
    Session s;
    std::string document = read_text_file(document_path);
    s.id = random_id();
    s.document_path = std::filesystem::absolute(document_path).string();
    s.grammar_path = std::filesystem::absolute(grammar_path).string();
    s.actions_path = actions_path.empty() ? "" : std::filesystem::absolute(actions_path).string();
    s.modules = pipeline.grammar().modules;
    s.document_mtime = file_mtime(document_path);
    s.created = s.modified = now_iso8601();
    s.dobrackets_style = options.dobrackets_style;

    auto spans = extract_formulas(document);
    s.entries.resize(spans.size());
    EmitterConfig emitter = emitter_for(options.dobrackets_style);

    std::size_t workers = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, spans.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (std::size_t i; (i = next++) < spans.size();) {
            try {
                s.entries[i] = analyse_formula(pipeline, spans[i], emitter, options.enumeration_cap);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return s;
}

FormulaEntry& find_entry(Session& session, std::size_t formula_id) {
    if (formula_id >= session.entries.size()) throw UnknownFormula(formula_id);
    return session.entries[formula_id];
}

const FormulaEntry& select(Session& session, std::size_t formula_id, std::size_t index) {
    FormulaEntry& e = find_entry(session, formula_id);
    if (e.status == FormulaStatus::Unparsed)
        throw Error("not_selectable", "formula " + std::to_string(formula_id) + " has no parses");
    if (index >= e.candidates.size()) throw BadIndex(index, e.candidates.size());
    e.choice = index;
    e.status = e.candidates.size() == 1 ? FormulaStatus::Unambiguous : FormulaStatus::Resolved;
    session.modified = now_iso8601();
    return e;
}

const FormulaEntry& skip(Session& session, std::size_t formula_id) {
    FormulaEntry& e = find_entry(session, formula_id);
    e.status = FormulaStatus::Skipped;
    e.choice.reset();
    session.modified = now_iso8601();
    return e;
}

std::vector<std::size_t> pending_ambiguities(const Session& session) {
    std::vector<std::size_t> out;
    for (const auto& e : session.entries)
        if (e.status == FormulaStatus::Ambiguous) out.push_back(e.formula.id);
    return out;
}

std::string render_export(const Session& session, DobracketsStyle style) {
    if (auto pending = pending_ambiguities(session); !pending.empty()) throw PendingAmbiguities(pending);
    std::string document = read_text_file(session.document_path);
    std::vector<FormulaSpan> spans;
    RewritePlan plan{session.document_path, {}};
    EmitterConfig config = emitter_for(style);
    for (const auto& e : session.entries) {
        spans.push_back(e.formula);
        bool chosen = e.status == FormulaStatus::Resolved || e.status == FormulaStatus::Unambiguous;
        if (chosen && e.choice) plan.replacements[e.formula.id] = emit(e.candidates.at(*e.choice).ast, config);
    }
    std::string out = rewrite(document, spans, plan);
    if (!plan.replacements.empty()) out = usemodule_notice(session.modules) + out;
    return out;
}

std::string export_session(const Session& session, std::optional<DobracketsStyle> style,
                           std::optional<std::string> output_path) {
    if (auto pending = pending_ambiguities(session); !pending.empty()) throw PendingAmbiguities(pending);
    if (file_mtime(session.document_path) != session.document_mtime) throw DocumentModified(session.document_path);
    std::string path = output_path.value_or(default_output_path(session.document_path));
    write_file_atomically(path, render_export(session, style.value_or(session.dobrackets_style)));
    return path;
}

namespace {

json span_json(const Span& s) { return json::array({s.begin, s.end}); }
Span span_from(const json& j) { return {j.at(0).get<std::size_t>(), j.at(1).get<std::size_t>()}; }

FormulaKind kind_from(const std::string& k) {
    for (auto kind : {FormulaKind::Inline, FormulaKind::Display, FormulaKind::Environment})
        if (to_string(kind) == k) return kind;
    throw Error("invalid_session", "unknown formula kind '" + k + "'");
}

std::string style_name(DobracketsStyle s) { return s == DobracketsStyle::Macro ? "macro" : "parens"; }

}  // namespace

json session_to_json(const Session& s) {
    json entries = json::array();
    for (const auto& e : s.entries) {
        json f{{"id", e.formula.id},
               {"kind", to_string(e.formula.kind)},
               {"environment", e.formula.environment},
               {"outer", span_json(e.formula.outer)},
               {"inner", span_json(e.formula.inner)},
               {"raw", e.formula.raw}};
        json candidates = json::array();
        for (const auto& c : e.candidates)
            candidates.push_back({{"tree_index", c.tree_index}, {"ast", ast_to_json(c.ast, true)}, {"preview", c.preview}});
        json je{{"formula", f}, {"status", to_string(e.status)}, {"reason", e.reason}, {"candidates", candidates}};
        je["position"] = e.position ? json(*e.position) : json(nullptr);
        je["choice"] = e.choice ? json(*e.choice) : json(nullptr);
        entries.push_back(je);
    }
    return {{"schema", kSessionSchema},
            {"id", s.id},
            {"document_path", s.document_path},
            {"grammar_path", s.grammar_path},
            {"actions_path", s.actions_path},
            {"modules", s.modules},
            {"document_mtime", s.document_mtime},
            {"created", s.created},
            {"modified", s.modified},
            {"dobrackets_style", style_name(s.dobrackets_style)},
            {"entries", entries}};
}

Session session_from_json(const json& j) {
    try {
        if (j.at("schema").get<int>() != kSessionSchema)
            throw Error("unsupported_schema", "session schema " + j.at("schema").dump() + " is not supported");
        Session s;
        s.id = j.at("id").get<std::string>();
        s.document_path = j.at("document_path").get<std::string>();
        s.grammar_path = j.at("grammar_path").get<std::string>();
        s.actions_path = j.at("actions_path").get<std::string>();
        s.modules = j.at("modules").get<std::vector<std::string>>();
        s.document_mtime = j.at("document_mtime").get<std::int64_t>();
        s.created = j.at("created").get<std::string>();
        s.modified = j.at("modified").get<std::string>();
        s.dobrackets_style = parse_dobrackets_style(j.at("dobrackets_style").get<std::string>());
        for (const auto& je : j.at("entries")) {
            FormulaEntry e;
            const auto& f = je.at("formula");
            e.formula.id = f.at("id").get<std::size_t>();
            e.formula.kind = kind_from(f.at("kind").get<std::string>());
            e.formula.environment = f.at("environment").get<std::string>();
            e.formula.outer = span_from(f.at("outer"));
            e.formula.inner = span_from(f.at("inner"));
            e.formula.raw = f.at("raw").get<std::string>();
            e.status = formula_status_from_string(je.at("status").get<std::string>());
            e.reason = je.at("reason").get<std::string>();
            if (!je.at("position").is_null()) e.position = je.at("position").get<std::size_t>();
            if (!je.at("choice").is_null()) e.choice = je.at("choice").get<std::size_t>();
            for (const auto& c : je.at("candidates"))
                e.candidates.push_back({c.at("tree_index").get<std::size_t>(), ast_from_json(c.at("ast")),
                                        c.at("preview").get<std::string>()});
            if (e.choice && *e.choice >= e.candidates.size())
                throw Error("invalid_session", "choice out of range in formula " + std::to_string(e.formula.id));
            s.entries.push_back(std::move(e));
        }
        return s;
    } catch (const json::exception& e) {
        throw Error("invalid_session", std::string("malformed session file: ") + e.what());
    }
}

json session_summary(const Session& s) {
    json counts = json::object();
    for (const auto& [status, name] : kStatusNames) counts[name] = 0;
    for (const auto& e : s.entries) counts[to_string(e.status)] = counts[to_string(e.status)].get<int>() + 1;
    auto pending = pending_ambiguities(s);
    return {{"session_id", s.id},
            {"document_path", s.document_path},
            {"grammar_path", s.grammar_path},
            {"total", s.entries.size()},
            {"counts", counts},
            {"pending", pending},
            {"exportable", pending.empty()},
            {"created", s.created},
            {"modified", s.modified}};
}

json entry_summary(const FormulaEntry& e) {
    json j{{"id", e.formula.id},
           {"raw", e.formula.raw},
           {"kind", to_string(e.formula.kind)},
           {"status", to_string(e.status)},
           {"candidate_count", e.candidates.size()}};
    j["choice"] = e.choice ? json(*e.choice) : json(nullptr);
    if (e.status == FormulaStatus::Unparsed) {
        j["reason"] = e.reason;
        j["position"] = e.position ? json(*e.position) : json(nullptr);
    }
    return j;
}

json entry_detail(const FormulaEntry& e) {
    json j = entry_summary(e);
    j["candidates"] = json::array();
    for (std::size_t i = 0; i < e.candidates.size(); ++i)
        j["candidates"].push_back({{"index", i}, {"ast", ast_to_json(e.candidates[i].ast)},
                                   {"preview", e.candidates[i].preview}});
    return j;
}

SessionStore::SessionStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
        if (entry.path().extension() != ".json") continue;
        try {
            Session s = session_from_json(json::parse(read_text_file(entry.path().string())));
            auto slot = std::make_shared<Slot>();
            slot->session = std::move(s);
            sessions_[slot->session.id] = slot;
        } catch (const std::exception&) {
            // Not a session file (or a damaged one); leave it alone.
        }
    }
}

std::filesystem::path SessionStore::autosave_path(const std::string& id) const { return dir_ / (id + ".json"); }

void SessionStore::save(const Session& s) const {
    write_file_atomically(autosave_path(s.id).string(), session_to_json(s).dump(2) + "\n");
}

std::shared_ptr<SessionStore::Slot> SessionStore::slot(const std::string& id) const {
    std::lock_guard lock(map_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error("unknown_session", "no session with id " + id);
    return it->second;
}

std::string SessionStore::create(const std::string& document_path, const std::string& grammar_path,
                                 const SessionOptions& options) {
    auto s = std::make_shared<Slot>();
    s->session = create_session(document_path, grammar_path, options);
    save(s->session);
    std::lock_guard lock(map_mutex_);
    sessions_[s->session.id] = s;
    return s->session.id;
}

Session SessionStore::snapshot(const std::string& id) const {
    auto s = slot(id);
    std::lock_guard lock(s->mutex);
    return s->session;
}

std::vector<std::string> SessionStore::ids() const {
    std::lock_guard lock(map_mutex_);
    std::vector<std::string> out;
    for (const auto& [id, s] : sessions_) out.push_back(id);
    return out;
}

FormulaEntry SessionStore::select(const std::string& id, std::size_t formula_id, std::size_t index) {
    auto s = slot(id);
    std::lock_guard lock(s->mutex);
    Session copy = s->session;
    FormulaEntry e = stexify::select(copy, formula_id, index);
    save(copy);
    s->session = std::move(copy);
    return e;
}

FormulaEntry SessionStore::skip(const std::string& id, std::size_t formula_id) {
    auto s = slot(id);
    std::lock_guard lock(s->mutex);
    Session copy = s->session;
    FormulaEntry e = stexify::skip(copy, formula_id);
    save(copy);
    s->session = std::move(copy);
    return e;
}

std::string SessionStore::export_session(const std::string& id, std::optional<DobracketsStyle> style,
                                         std::optional<std::string> output_path) {
    auto s = slot(id);
    std::lock_guard lock(s->mutex);
    return stexify::export_session(s->session, style, std::move(output_path));
}

}  // namespace stexify
