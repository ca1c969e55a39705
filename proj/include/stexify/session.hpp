#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stexify/ast.hpp"
#include "stexify/emit.hpp"
#include "stexify/error.hpp"
#include "stexify/glr.hpp"
#include "stexify/tex.hpp"

namespace stexify {

enum class FormulaStatus { Unparsed, Unambiguous, Ambiguous, Resolved, Skipped };

std::string to_string(FormulaStatus status);
FormulaStatus formula_status_from_string(const std::string& text);

struct Candidate {
    std::size_t tree_index = 0;  // first enumerated tree producing this AST
    AstNode ast;
    std::string preview;  // emit(ast) under the session's emitter config

    friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct FormulaEntry {
    FormulaSpan formula;
    FormulaStatus status = FormulaStatus::Unparsed;
    std::string reason;                   // Unparsed only
    std::optional<std::size_t> position;  // Unparsed: byte offset inside the formula
    std::optional<std::size_t> choice;    // Resolved, and 0 for Unambiguous
    std::vector<Candidate> candidates;

    friend bool operator==(const FormulaEntry&, const FormulaEntry&) = default;
};

struct Session {
    std::string id;
    std::string document_path;
    std::string grammar_path;
    std::string actions_path;  // empty when the defaults were used
    std::vector<std::string> modules;
    std::int64_t document_mtime = 0;  // nanoseconds since the file clock's epoch
    std::string created;
    std::string modified;
    DobracketsStyle dobrackets_style = DobracketsStyle::Macro;
    std::vector<FormulaEntry> entries;

    friend bool operator==(const Session&, const Session&) = default;
};

struct SessionOptions {
    std::optional<std::string> actions_path;  // default: sidecar next to the grammar, if present
    DobracketsStyle dobrackets_style = DobracketsStyle::Macro;
    std::size_t enumeration_cap = kDefaultEnumerationCap;
    std::size_t threads = 0;  // 0: hardware concurrency
};

class UnknownFormula : public Error {
public:
    explicit UnknownFormula(std::size_t id) : Error("unknown_formula", "no formula with id " + std::to_string(id)) {}
};

class BadIndex : public Error {
public:
    BadIndex(std::size_t index, std::size_t count)
        : Error("bad_index", "candidate index " + std::to_string(index) + " out of range (" +
                                 std::to_string(count) + " candidates)") {}
};

class PendingAmbiguities : public Error {
public:
    explicit PendingAmbiguities(std::vector<std::size_t> ids);
    const std::vector<std::size_t>& ids() const noexcept { return ids_; }

private:
    std::vector<std::size_t> ids_;
};

class DocumentModified : public Error {
public:
    explicit DocumentModified(const std::string& path)
        : Error("document_modified", path + " changed on disk since the session was created") {}
};

/// Tables and actions for one grammar file.
struct Pipeline {
    CompiledGrammar compiled;
    ActionTable actions;
    RecognizerRegistry registry;
    std::string actions_path;  // empty when the defaults were used

    const Grammar& grammar() const { return compiled.grammar(); }
};

/// Actions come from `actions_path`, else the sidecar next to the grammar, else the defaults.
Pipeline load_pipeline(const std::string& grammar_path, const std::optional<std::string>& actions_path = std::nullopt);

/// Parses one formula: status, deduplicated candidates and their previews.
FormulaEntry analyse_formula(const Pipeline& pipeline, const FormulaSpan& formula, const EmitterConfig& emitter,
                             std::size_t cap = kDefaultEnumerationCap);

/// Extracts and parses every formula of the document. Does not persist.
Session create_session(const std::string& document_path, const std::string& grammar_path,
                       const SessionOptions& options = {});

FormulaEntry& find_entry(Session& session, std::size_t formula_id);

/// Records choice `index`; the entry becomes Resolved (Unambiguous stays so).
const FormulaEntry& select(Session& session, std::size_t formula_id, std::size_t index);
const FormulaEntry& skip(Session& session, std::size_t formula_id);

/// Entries still waiting for a human choice.
std::vector<std::size_t> pending_ambiguities(const Session& session);

/// Document text with Resolved and Unambiguous formulas replaced. Throws
/// PendingAmbiguities while any entry is Ambiguous.
std::string render_export(const Session& session, DobracketsStyle style);

/// render_export written atomically to `output_path` (default
/// `<stem>.stexified.tex`). Refuses when the document changed on disk.
std::string export_session(const Session& session, std::optional<DobracketsStyle> style = std::nullopt,
                           std::optional<std::string> output_path = std::nullopt);

inline constexpr int kSessionSchema = 1;

nlohmann::json session_to_json(const Session& session);
Session session_from_json(const nlohmann::json& j);

/// Status counts plus identifying fields.
nlohmann::json session_summary(const Session& session);
nlohmann::json entry_summary(const FormulaEntry& entry);
nlohmann::json entry_detail(const FormulaEntry& entry);

std::int64_t file_mtime(const std::string& path);

/// Sessions kept in memory and autosaved as `<dir>/<id>.json` after every
/// change. One writer at a time per session.
class SessionStore {
public:
    explicit SessionStore(std::filesystem::path dir);

    std::string create(const std::string& document_path, const std::string& grammar_path,
                       const SessionOptions& options = {});

    Session snapshot(const std::string& id) const;
    std::vector<std::string> ids() const;

    FormulaEntry select(const std::string& id, std::size_t formula_id, std::size_t index);
    FormulaEntry skip(const std::string& id, std::size_t formula_id);
    std::string export_session(const std::string& id, std::optional<DobracketsStyle> style,
                               std::optional<std::string> output_path = std::nullopt);

    std::filesystem::path autosave_path(const std::string& id) const;

private:
    struct Slot {
        mutable std::mutex mutex;
        Session session;
    };

    std::shared_ptr<Slot> slot(const std::string& id) const;
    void save(const Session& session) const;

    std::filesystem::path dir_;
    mutable std::mutex map_mutex_;
    std::map<std::string, std::shared_ptr<Slot>> sessions_;
};

}  // namespace stexify
