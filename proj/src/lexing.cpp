#include "stexify/lexing.hpp"

#include <cctype>

namespace stexify {

namespace {

bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_letter(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

// `\` followed only by letters: such a literal must not be followed by a letter.
bool is_control_word(std::string_view lit) {
    if (lit.size() < 2 || lit.front() != '\\') return false;
    for (std::size_t i = 1; i < lit.size(); ++i)
        if (!is_letter(lit[i])) return false;
    return true;
}

}  // namespace

const Recognizer* RecognizerRegistry::find(std::string_view name) const {
    auto it = hooks_.find(name);
    return it == hooks_.end() ? nullptr : &it->second;
}

std::vector<std::string> RecognizerRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [name, fn] : hooks_) out.push_back(name);
    return out;
}

RecognizerRegistry RecognizerRegistry::with_builtins() {
    RecognizerRegistry r;
    r.add("lc_variable", variable_recognizer);
    r.add("natural_number", nat_recognizer);
    return r;
}

std::optional<std::size_t> variable_recognizer(std::string_view input, std::size_t pos) {
    if (pos >= input.size() || !is_lower(input[pos])) return std::nullopt;
    std::size_t i = pos + 1;
    auto primes = [&] {
        while (i < input.size() && input[i] == '\'') ++i;
    };
    primes();
    if (input.substr(i, 2) == "_{") {
        std::size_t j = i + 2;
        std::size_t digits = j;
        while (j < input.size() && is_digit(input[j])) ++j;
        if (j > digits && j < input.size() && input[j] == '}') {
            i = j + 1;
            primes();
        }
    }
    return i - pos;
}

std::optional<std::size_t> nat_recognizer(std::string_view input, std::size_t pos) {
    if (pos >= input.size() || !is_digit(input[pos])) return std::nullopt;
    if (input[pos] == '0') return 1;
    std::size_t i = pos;
    while (i < input.size() && is_digit(input[i])) ++i;
    return i - pos;
}

Scanner::Scanner(const Grammar& grammar, const RecognizerRegistry& registry)
    : skip_whitespace_(grammar.skip_whitespace) {
    for (const auto& t : grammar.terminals) {
        Matcher m;
        m.id = t.id;
        if (const auto* lit = std::get_if<LiteralTerminal>(&t.kind)) {
            m.literals = lit->alternatives;
        } else if (const auto* re = std::get_if<RegexTerminal>(&t.kind)) {
            m.regex.emplace(re->pattern, std::regex::ECMAScript);
        } else {
            const auto& hook = std::get<RecognizerTerminal>(t.kind).hook;
            m.recognizer = registry.find(hook);
            if (!m.recognizer)
                throw Error("unknown_recognizer",
                            "terminal '" + t.id + "' uses unregistered recognizer '" + hook + "'");
        }
        matchers_.push_back(std::move(m));
    }
}

std::optional<std::size_t> Scanner::index_of(std::string_view id) const {
    for (std::size_t i = 0; i < matchers_.size(); ++i)
        if (matchers_[i].id == id) return i;
    return std::nullopt;
}

std::size_t Scanner::skip_whitespace(std::string_view input, std::size_t pos) const {
    if (!skip_whitespace_) return pos;
    while (pos < input.size() &&
           (input[pos] == ' ' || input[pos] == '\t' || input[pos] == '\n' || input[pos] == '\r'))
        ++pos;
    return pos;
}

std::optional<std::size_t> Scanner::match(std::size_t terminal, std::string_view input,
                                          std::size_t pos) const {
    const Matcher& m = matchers_.at(terminal);
    if (pos >= input.size()) return std::nullopt;
    std::size_t best = 0;
    if (!m.literals.empty()) {
        for (const auto& lit : m.literals) {
            if (lit.size() <= best || input.substr(pos, lit.size()) != lit) continue;
            std::size_t after = pos + lit.size();
            if (is_control_word(lit) && after < input.size() && is_letter(input[after])) continue;
            best = lit.size();
        }
    } else if (m.regex) {
        const char* base = input.data();
        for (std::size_t end = input.size(); end > pos; --end) {
            if (std::regex_match(base + pos, base + end, *m.regex)) {
                best = end - pos;
                break;
            }
        }
    } else {
        auto len = (*m.recognizer)(input, pos);
        if (len && *len <= input.size() - pos) best = *len;
    }
    if (best == 0) return std::nullopt;
    return best;
}

std::vector<std::pair<std::size_t, Token>> Scanner::scan(
    std::string_view input, std::size_t pos, const std::vector<std::size_t>& expected) const {
    std::vector<std::pair<std::size_t, Token>> out;
    for (std::size_t t : expected) {
        if (t >= matchers_.size()) continue;
        if (auto len = match(t, input, pos)) {
            Token tok{matchers_[t].id, std::string(input.substr(pos, *len)), {pos, pos + *len}};
            out.emplace_back(t, std::move(tok));
        }
    }
    return out;
}

std::vector<Token> next_tokens(std::string_view input, std::size_t pos,
                               const std::set<std::string>& expected, const Grammar& grammar,
                               const RecognizerRegistry& registry) {
    Scanner scanner(grammar, registry);
    std::vector<std::size_t> indices;
    for (std::size_t i = 0; i < scanner.terminal_count(); ++i)
        if (expected.count(scanner.terminal_id(i))) indices.push_back(i);
    std::size_t at = scanner.skip_whitespace(input, std::min(pos, input.size()));
    std::vector<Token> out;
    for (auto& [index, tok] : scanner.scan(input, at, indices)) out.push_back(std::move(tok));
    return out;
}

}  // namespace stexify
