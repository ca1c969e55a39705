#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "stexify/grammar.hpp"

namespace stexify {

/// Half-open byte range.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
    friend bool operator==(const Span&, const Span&) = default;
};

struct Token {
    std::string terminal_id;
    std::string lexeme;
    Span span;
    friend bool operator==(const Token&, const Token&) = default;
};

/// A recognizer returns the length of the token starting at `pos`, or nothing.
/// Lengths of zero are treated as "no match".
using Recognizer = std::function<std::optional<std::size_t>(std::string_view input, std::size_t pos)>;

class RecognizerRegistry {
public:
    /// Registry holding `lc_variable` and `natural_number`.
    static RecognizerRegistry with_builtins();

    void add(std::string name, Recognizer fn) { hooks_[std::move(name)] = std::move(fn); }
    const Recognizer* find(std::string_view name) const;
    std::vector<std::string> names() const;

private:
    std::map<std::string, Recognizer, std::less<>> hooks_;
};

/// letter ('*) (_{digits})? ('*) with letter in [a-z].
std::optional<std::size_t> variable_recognizer(std::string_view input, std::size_t pos);

/// 0 | [1-9][0-9]*
std::optional<std::size_t> nat_recognizer(std::string_view input, std::size_t pos);

/// Terminal matchers of one grammar, compiled once and reused across scans.
class Scanner {
public:
    /// Throws Error("unknown_recognizer") when a terminal names an unregistered hook.
    Scanner(const Grammar& grammar, const RecognizerRegistry& registry);

    std::size_t terminal_count() const { return matchers_.size(); }
    const std::string& terminal_id(std::size_t index) const { return matchers_[index].id; }
    std::optional<std::size_t> index_of(std::string_view id) const;

    std::size_t skip_whitespace(std::string_view input, std::size_t pos) const;

    /// Longest match of one terminal at `pos` (no whitespace skipping).
    std::optional<std::size_t> match(std::size_t terminal, std::string_view input,
                                     std::size_t pos) const;

    /// Every expected terminal that matches at `pos`, in terminal declaration
    /// order. `pos` must already be past any skippable whitespace.
    std::vector<std::pair<std::size_t, Token>> scan(std::string_view input, std::size_t pos,
                                                    const std::vector<std::size_t>& expected) const;

private:
    struct Matcher {
        std::string id;
        std::vector<std::string> literals;
        std::optional<std::regex> regex;
        const Recognizer* recognizer = nullptr;
    };

    std::vector<Matcher> matchers_;
    bool skip_whitespace_ = true;
};

/// Skips whitespace (if the grammar asks for it) and returns all maximal
/// matches at the resulting position, one per matching expected terminal.
std::vector<Token> next_tokens(std::string_view input, std::size_t pos,
                               const std::set<std::string>& expected, const Grammar& grammar,
                               const RecognizerRegistry& registry);

}  // namespace stexify
