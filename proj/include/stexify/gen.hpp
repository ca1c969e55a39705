#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "stexify/ast.hpp"
#include "stexify/error.hpp"
#include "stexify/grammar.hpp"

namespace stexify {

/// Argument modes of a semantic macro: `i` single term, `a` flexary list of
/// terms, `b` single bound variable, `B` sequence of bound variables.
struct ArgKind {
    enum class Kind { Single, Flexary, Binder, BinderSequence };
    Kind kind = Kind::Single;
    std::string separator;  // list kinds only; may be empty (juxtaposition)

    friend bool operator==(const ArgKind&, const ArgKind&) = default;
};

struct TemplateToken {
    enum class Kind { Literal, ArgRef };
    Kind kind = Kind::Literal;
    std::string text;       // Literal
    std::size_t index = 0;  // ArgRef, 1-based

    static TemplateToken literal(std::string text) { return {Kind::Literal, std::move(text), 0}; }
    static TemplateToken arg(std::size_t index) { return {Kind::ArgRef, {}, index}; }
    friend bool operator==(const TemplateToken&, const TemplateToken&) = default;
};

struct MacroSpec {
    std::string name;
    std::size_t arity = 0;
    std::vector<ArgKind> arg_kinds;  // size == arity
    std::vector<TemplateToken> tmpl;
    std::size_t line = 0;  // declaration line in its source

    friend bool operator==(const MacroSpec&, const MacroSpec&) = default;
};

class MalformedDeclaration : public Error {
public:
    MalformedDeclaration(std::size_t line, const std::string& message)
        : Error("malformed_declaration", "line " + std::to_string(line) + ": " + message), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct ScanResult {
    std::vector<MacroSpec> specs;      // declaration order; later notations override
    std::vector<std::string> modules;  // `smodule` names in order of appearance
};

/// Reads `\symdef{name}[opts]{body}` and `\notation{name}[opts]{body}`.
ScanResult scan_stex_source(std::string_view source);

/// Merges `more` into `into`: same-named specs are replaced in place.
void merge_scan(ScanResult& into, ScanResult more);

struct GenConfig {
    std::string expression_symbol = "EXPR";
    bool include_parentheses_rule = true;
    TerminalKind atom_terminal = RecognizerTerminal{"lc_variable"};
    std::string atom_name = "var";
};

struct GenWarning {
    enum class Kind { UnresolvableTemplate, UnusedArgument, EmptyTemplate, DuplicateAtom };
    Kind kind;
    std::string macro;
    std::string message;
};

class NameCollision : public Error {
public:
    explicit NameCollision(const std::string& message) : Error("name_collision", message) {}
};

struct GeneratedGrammar {
    Grammar grammar;
    ActionTable actions;
    std::string text;  // grammar file contents
    std::vector<GenWarning> warnings;
};

/// One expression nonterminal with an alternative per macro, the atom
/// terminal and (optionally) a parenthesis rule. A macro whose notation is
/// exactly `#1` is taken as the atom marker and names the atom terminal.
GeneratedGrammar generate_grammar(const std::vector<MacroSpec>& specs, const GenConfig& config = {},
                                  const std::vector<std::string>& modules = {});

}  // namespace stexify
