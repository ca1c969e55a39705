#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "stexify/error.hpp"

namespace stexify {

/// Terminal matching one of several literal strings (longest wins).
struct LiteralTerminal {
    std::vector<std::string> alternatives;
    friend bool operator==(const LiteralTerminal&, const LiteralTerminal&) = default;
};

/// Terminal matching an ECMAScript regular expression anchored at the scan position.
struct RegexTerminal {
    std::string pattern;
    friend bool operator==(const RegexTerminal&, const RegexTerminal&) = default;
};

/// Terminal delegated to a named recognizer function (see lexing.hpp).
struct RecognizerTerminal {
    std::string hook;
    friend bool operator==(const RecognizerTerminal&, const RecognizerTerminal&) = default;
};

using TerminalKind = std::variant<LiteralTerminal, RegexTerminal, RecognizerTerminal>;

struct Terminal {
    std::string id;
    TerminalKind kind;
    /// Declared inline in a rule (`"("`, `/x/`) rather than in the terminals section.
    bool anonymous = false;

    bool is_literal() const { return std::holds_alternative<LiteralTerminal>(kind); }
    friend bool operator==(const Terminal&, const Terminal&) = default;
};

struct Symbol {
    enum class Kind { NonTerminal, Terminal };
    Kind kind = Kind::NonTerminal;
    std::string name;

    static Symbol nonterminal(std::string name) { return {Kind::NonTerminal, std::move(name)}; }
    static Symbol terminal(std::string id) { return {Kind::Terminal, std::move(id)}; }
    bool is_terminal() const { return kind == Kind::Terminal; }
    friend bool operator==(const Symbol&, const Symbol&) = default;
};

struct Production {
    std::size_t index = 0;
    std::string lhs;
    std::vector<Symbol> rhs;  // empty = epsilon
    friend bool operator==(const Production&, const Production&) = default;
};

/// A context-free grammar whose terminals are literals, regexes or recognizers.
/// Immutable once built; share freely.
struct Grammar {
    std::string name;
    std::string start;
    std::vector<Production> productions;
    std::vector<Terminal> terminals;  // declaration order
    bool skip_whitespace = true;
    /// sTeX module names recorded by the generator (`// @module` lines).
    std::vector<std::string> modules;

    const Terminal* find_terminal(std::string_view id) const;
    bool is_nonterminal(std::string_view name) const;
    /// Nonterminals in order of first appearance as a left-hand side.
    std::vector<std::string> nonterminals() const;
    std::vector<const Production*> productions_of(std::string_view lhs) const;

    friend bool operator==(const Grammar&, const Grammar&) = default;
};

class GrammarSyntaxError : public Error {
public:
    GrammarSyntaxError(const std::string& message, std::size_t line, std::size_t column);
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// Parses the textual grammar format. Error codes: `syntax_error`,
/// `duplicate_terminal`, `empty_grammar`, `undefined_nonterminal`, `symbol_clash`.
Grammar parse_grammar_text(std::string_view source, std::string name = {});
Grammar load_grammar_file(const std::string& path);

/// Writes `grammar` back in the textual format; parse_grammar_text of the
/// result is structurally equal to the input.
std::string serialize_grammar(const Grammar& grammar);

struct ValidationReport {
    std::vector<std::string> cyclic;
    std::vector<std::string> unproductive;
    std::vector<std::string> unreachable;  // warning only
    std::vector<std::string> undefined;

    bool ok() const { return cyclic.empty() && unproductive.empty() && undefined.empty(); }
    std::string describe() const;
};

ValidationReport validate(const Grammar& grammar);

bool is_identifier(std::string_view text);

}  // namespace stexify
