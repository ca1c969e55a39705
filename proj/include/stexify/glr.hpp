#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stexify/grammar.hpp"
#include "stexify/lexing.hpp"

namespace stexify {

class InvalidGrammar : public Error {
public:
    explicit InvalidGrammar(ValidationReport report)
        : Error("invalid_grammar", "invalid grammar: " + report.describe()),
          report_(std::move(report)) {}
    const ValidationReport& report() const noexcept { return report_; }

private:
    ValidationReport report_;
};

struct LrAction {
    enum class Kind { Shift, Reduce, Accept };
    Kind kind;
    std::size_t target = 0;  // state for Shift, production index for Reduce
    friend bool operator==(const LrAction&, const LrAction&) = default;
};

/// LALR(1) tables for a validated grammar. Conflicting actions are kept side by
/// side; the GLR driver forks on them.
///
/// Terminal column 0 is end-of-input; column i+1 is `grammar.terminals[i]`.
class CompiledGrammar {
public:
    static constexpr std::size_t kEndOfInput = 0;
    static constexpr std::size_t kNoState = std::numeric_limits<std::size_t>::max();

    const Grammar& grammar() const { return *grammar_; }
    std::size_t state_count() const { return actions_.size(); }
    std::size_t terminal_columns() const { return grammar_->terminals.size() + 1; }
    std::size_t nonterminal_count() const { return nonterminals_.size(); }
    const std::string& nonterminal_name(std::size_t nt) const { return nonterminals_[nt]; }
    std::optional<std::size_t> nonterminal_index(std::string_view name) const;
    std::optional<std::size_t> terminal_column(std::string_view id) const;

    const std::vector<LrAction>& actions(std::size_t state, std::size_t column) const {
        return actions_[state][column];
    }
    std::size_t go_to(std::size_t state, std::size_t nonterminal) const {
        return goto_[state][nonterminal];
    }
    std::size_t production_lhs(std::size_t production) const { return lhs_[production]; }
    std::size_t production_length(std::size_t production) const {
        return grammar_->productions[production].rhs.size();
    }

    /// (state, terminal column) pairs holding more than one action.
    std::vector<std::pair<std::size_t, std::size_t>> conflicts() const;

private:
    friend CompiledGrammar compile(const Grammar& grammar);

    std::shared_ptr<const Grammar> grammar_;
    std::vector<std::string> nonterminals_;
    std::vector<std::size_t> lhs_;
    std::vector<std::vector<std::vector<LrAction>>> actions_;
    std::vector<std::vector<std::size_t>> goto_;
};

/// Throws InvalidGrammar when validate() reports cycles, unproductive or undefined symbols.
CompiledGrammar compile(const Grammar& grammar);

/// One alternative derivation of a forest node.
struct PackedNode {
    std::size_t production = 0;
    std::vector<std::size_t> children;  // forest node indices, left to right
    friend bool operator==(const PackedNode&, const PackedNode&) = default;
};

/// Symbol node of the shared packed parse forest. Spans are measured in
/// scanner positions: `begin` is where the first token starts and `end` is
/// where the token following the node starts (or the input length).
struct ForestNode {
    bool terminal = false;
    std::string symbol;  // nonterminal name or terminal id
    Span span;
    std::optional<Token> token;      // terminal nodes only
    std::vector<PackedNode> packed;  // nonterminal nodes only; sorted deterministically
};

struct NoParse {
    enum class Kind { Lexical, Syntax, UnexpectedEnd };
    Kind kind;
    std::size_t position;
    std::vector<std::string> expected;  // terminal ids ("$end" for end of input)
    std::string describe() const;
};

class ParseForest {
public:
    const std::vector<ForestNode>& nodes() const { return nodes_; }
    const ForestNode& node(std::size_t i) const { return nodes_[i]; }
    std::optional<std::size_t> root() const { return root_; }
    bool empty() const { return !root_.has_value(); }
    const std::optional<NoParse>& failure() const { return failure_; }
    const std::string& input() const { return input_; }

private:
    friend class GlrDriver;
    std::vector<ForestNode> nodes_;
    std::optional<std::size_t> root_;
    std::optional<NoParse> failure_;
    std::string input_;
};

/// Runs GLR over the whole input. An input without derivations yields an
/// empty forest whose failure() says where and why parsing stopped.
ParseForest parse(const CompiledGrammar& compiled, std::string_view input,
                  const RecognizerRegistry& registry);

/// Concrete derivation. Leaves carry tokens; inner nodes carry the production.
struct ParseTree {
    static constexpr std::size_t kLeaf = std::numeric_limits<std::size_t>::max();

    std::size_t production = kLeaf;
    Token token;  // leaves only
    std::vector<ParseTree> children;

    bool is_leaf() const { return production == kLeaf; }
    friend bool operator==(const ParseTree&, const ParseTree&) = default;
};

/// Lexemes of the leaves, left to right.
std::vector<std::string> frontier(const ParseTree& tree);

class TooManyParses : public Error {
public:
    TooManyParses(std::uint64_t count, bool exact, std::size_t cap);
    std::uint64_t count() const noexcept { return count_; }
    bool exact() const noexcept { return exact_; }

private:
    std::uint64_t count_;
    bool exact_;
};

inline constexpr std::size_t kDefaultEnumerationCap = 256;
inline constexpr std::uint64_t kCountSaturated = std::numeric_limits<std::uint64_t>::max();

/// Number of derivations in the forest, saturating at 2^64-1.
std::uint64_t count_trees(const ParseForest& forest);

/// All derivations, ordered by production index at the leftmost point where
/// two trees differ. Throws TooManyParses above `cap`.
std::vector<ParseTree> enumerate_trees(const ParseForest& forest,
                                       std::size_t cap = kDefaultEnumerationCap);

}  // namespace stexify
