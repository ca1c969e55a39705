#include "stexify/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <regex>
#include <set>
#include <sstream>

namespace stexify {

const Terminal* Grammar::find_terminal(std::string_view id) const {
    for (const auto& t : terminals)
        if (t.id == id) return &t;
    return nullptr;
}

bool Grammar::is_nonterminal(std::string_view name) const {
    return std::any_of(productions.begin(), productions.end(),
                       [&](const Production& p) { return p.lhs == name; });
}

std::vector<std::string> Grammar::nonterminals() const {
    std::vector<std::string> out;
    for (const auto& p : productions)
        if (std::find(out.begin(), out.end(), p.lhs) == out.end()) out.push_back(p.lhs);
    return out;
}

std::vector<const Production*> Grammar::productions_of(std::string_view lhs) const {
    std::vector<const Production*> out;
    for (const auto& p : productions)
        if (p.lhs == lhs) out.push_back(&p);
    return out;
}

bool is_identifier(std::string_view text) {
    if (text.empty()) return false;
    auto head = static_cast<unsigned char>(text.front());
    if (!(std::isalpha(head) || head == '_')) return false;
    return std::all_of(text.begin() + 1, text.end(), [](char c) {
        auto u = static_cast<unsigned char>(c);
        return std::isalnum(u) || u == '_';
    });
}

GrammarSyntaxError::GrammarSyntaxError(const std::string& message, std::size_t line,
                                       std::size_t column)
    : Error("syntax_error",
            "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

namespace {

struct Lexeme {
    enum class Kind { Ident, String, Regex, Recognizer, Colon, Bar, Semi, End };
    Kind kind;
    std::string text;
    std::size_t line;
    std::size_t column;
};

class GrammarLexer {
public:
    GrammarLexer(std::string_view src, std::vector<std::string>& modules)
        : src_(src), modules_(modules) {}

    Lexeme next() {
        skip_trivia();
        std::size_t line = line_, col = col_;
        if (pos_ >= src_.size()) return {Lexeme::Kind::End, "", line, col};
        char c = src_[pos_];
        auto single = [&](Lexeme::Kind k) {
            advance();
            return Lexeme{k, std::string(1, c), line, col};
        };
        switch (c) {
        case ':': return single(Lexeme::Kind::Colon);
        case '|': return single(Lexeme::Kind::Bar);
        case ';': return single(Lexeme::Kind::Semi);
        case '"': return string_literal(line, col);
        case '/': return regex_literal(line, col);
        case '@': return recognizer(line, col);
        default: break;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                          src_[pos_] == '_'))
                advance();
            return {Lexeme::Kind::Ident, std::string(src_.substr(start, pos_ - start)), line, col};
        }
        throw GrammarSyntaxError(std::string("unexpected character '") + c + "'", line, col);
    }

private:
    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_trivia() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
                std::size_t start = pos_ + 2;
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
                record_pragma(src_.substr(start, pos_ - start));
            } else {
                break;
            }
        }
    }

    void record_pragma(std::string_view comment) {
        while (!comment.empty() && comment.front() == ' ') comment.remove_prefix(1);
        constexpr std::string_view tag = "@module ";
        if (comment.substr(0, tag.size()) != tag) return;
        comment.remove_prefix(tag.size());
        while (!comment.empty() && std::isspace(static_cast<unsigned char>(comment.back())))
            comment.remove_suffix(1);
        while (!comment.empty() && comment.front() == ' ') comment.remove_prefix(1);
        if (!comment.empty()) modules_.emplace_back(comment);
    }

    Lexeme string_literal(std::size_t line, std::size_t col) {
        advance();
        std::string out;
        while (true) {
            if (pos_ >= src_.size() || src_[pos_] == '\n')
                throw GrammarSyntaxError("unterminated string literal", line, col);
            char c = src_[pos_];
            if (c == '"') {
                advance();
                break;
            }
            if (c == '\\' && pos_ + 1 < src_.size() &&
                (src_[pos_ + 1] == '"' || src_[pos_ + 1] == '\\')) {
                advance();
                out += src_[pos_];
                advance();
                continue;
            }
            out += c;
            advance();
        }
        if (out.empty()) throw GrammarSyntaxError("empty string literal", line, col);
        return {Lexeme::Kind::String, out, line, col};
    }

    Lexeme regex_literal(std::size_t line, std::size_t col) {
        advance();
        std::string out;
        while (true) {
            if (pos_ >= src_.size() || src_[pos_] == '\n')
                throw GrammarSyntaxError("unterminated regex", line, col);
            char c = src_[pos_];
            if (c == '/') {
                advance();
                break;
            }
            if (c == '\\' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
                advance();
                out += '/';
                advance();
                continue;
            }
            out += c;
            advance();
        }
        if (out.empty()) throw GrammarSyntaxError("empty regex", line, col);
        try {
            std::regex check(out);
        } catch (const std::regex_error& e) {
            throw GrammarSyntaxError("invalid regex /" + out + "/: " + e.what(), line, col);
        }
        return {Lexeme::Kind::Regex, out, line, col};
    }

    Lexeme recognizer(std::size_t line, std::size_t col) {
        constexpr std::string_view head = "@recognizer(";
        if (src_.substr(pos_, head.size()) != head)
            throw GrammarSyntaxError("expected @recognizer(name)", line, col);
        for (std::size_t i = 0; i < head.size(); ++i) advance();
        std::size_t start = pos_;
        while (pos_ < src_.size() && src_[pos_] != ')' && src_[pos_] != '\n') advance();
        if (pos_ >= src_.size() || src_[pos_] != ')')
            throw GrammarSyntaxError("unterminated @recognizer(", line, col);
        std::string name(src_.substr(start, pos_ - start));
        advance();
        if (!is_identifier(name))
            throw GrammarSyntaxError("invalid recognizer name '" + name + "'", line, col);
        return {Lexeme::Kind::Recognizer, name, line, col};
    }

    std::string_view src_;
    std::vector<std::string>& modules_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;
};

struct RawRule {
    Lexeme name;
    std::vector<std::vector<Lexeme>> alternatives;
};

class GrammarParser {
public:
    GrammarParser(std::string_view src, std::vector<std::string>& modules) : lex_(src, modules) {
        shift();
    }

    void run(std::optional<std::string>& start_header, std::vector<RawRule>& rules,
             std::vector<RawRule>& terminals) {
        bool in_terminals = false;
        bool first = true;
        while (cur_.kind != Lexeme::Kind::End) {
            if (cur_.kind != Lexeme::Kind::Ident)
                throw GrammarSyntaxError("expected rule name, found '" + cur_.text + "'",
                                         cur_.line, cur_.column);
            Lexeme name = cur_;
            shift();
            if (name.text == "terminals" && cur_.kind != Lexeme::Kind::Colon) {
                if (in_terminals)
                    throw GrammarSyntaxError("duplicate 'terminals' section", name.line,
                                             name.column);
                in_terminals = true;
                first = false;
                continue;
            }
            expect(Lexeme::Kind::Colon, "':'");
            RawRule rule{name, {}};
            rule.alternatives.push_back(alternative());
            while (cur_.kind == Lexeme::Kind::Bar) {
                shift();
                rule.alternatives.push_back(alternative());
            }
            expect(Lexeme::Kind::Semi, "';'");
            bool header = first && !in_terminals && name.text == "start" &&
                          rule.alternatives.size() == 1 && rule.alternatives[0].size() == 1 &&
                          rule.alternatives[0][0].kind == Lexeme::Kind::Ident;
            first = false;
            if (header) {
                start_header = rule.alternatives[0][0].text;
                continue;
            }
            (in_terminals ? terminals : rules).push_back(std::move(rule));
        }
    }

private:
    std::vector<Lexeme> alternative() {
        std::vector<Lexeme> items;
        while (cur_.kind == Lexeme::Kind::Ident || cur_.kind == Lexeme::Kind::String ||
               cur_.kind == Lexeme::Kind::Regex || cur_.kind == Lexeme::Kind::Recognizer) {
            items.push_back(cur_);
            shift();
        }
        if (items.empty())
            throw GrammarSyntaxError("empty alternative (write EMPTY for epsilon)", cur_.line,
                                     cur_.column);
        return items;
    }

    void expect(Lexeme::Kind kind, const char* what) {
        if (cur_.kind != kind)
            throw GrammarSyntaxError(std::string("expected ") + what + ", found '" + cur_.text +
                                         "'",
                                     cur_.line, cur_.column);
        shift();
    }

    void shift() { cur_ = lex_.next(); }

    GrammarLexer lex_;
    Lexeme cur_{Lexeme::Kind::End, "", 0, 0};
};

TerminalKind terminal_kind_of(const RawRule& rule) {
    const auto& alts = rule.alternatives;
    bool all_strings = std::all_of(alts.begin(), alts.end(), [](const auto& alt) {
        return alt.size() == 1 && alt[0].kind == Lexeme::Kind::String;
    });
    if (all_strings) {
        LiteralTerminal lit;
        for (const auto& alt : alts) lit.alternatives.push_back(alt[0].text);
        return lit;
    }
    if (alts.size() == 1 && alts[0].size() == 1) {
        const auto& item = alts[0][0];
        if (item.kind == Lexeme::Kind::Regex) return RegexTerminal{item.text};
        if (item.kind == Lexeme::Kind::Recognizer) return RecognizerTerminal{item.text};
    }
    throw GrammarSyntaxError("terminal '" + rule.name.text +
                                 "' must be literals, a single /regex/ or @recognizer(name)",
                             rule.name.line, rule.name.column);
}

}  // namespace

Grammar parse_grammar_text(std::string_view source, std::string name) {
    Grammar g;
    g.name = std::move(name);
    std::optional<std::string> start_header;
    std::vector<RawRule> rules, term_rules;
    GrammarParser(source, g.modules).run(start_header, rules, term_rules);

    if (rules.empty()) throw Error("empty_grammar", "grammar has no rules");

    std::set<std::string> lhs_names;
    for (const auto& r : rules) lhs_names.insert(r.name.text);

    std::set<std::string> taken = lhs_names;
    for (const auto& r : term_rules) {
        if (g.find_terminal(r.name.text))
            throw Error("duplicate_terminal", "terminal '" + r.name.text + "' declared twice");
        if (lhs_names.count(r.name.text))
            throw Error("symbol_clash",
                        "'" + r.name.text + "' is both a terminal and a nonterminal");
        g.terminals.push_back({r.name.text, terminal_kind_of(r), false});
        taken.insert(r.name.text);
    }

    std::size_t lit_counter = 0, re_counter = 0;
    auto fresh = [&](const char* stem, std::size_t& counter) {
        std::string id;
        do id = std::string(stem) + std::to_string(++counter);
        while (taken.count(id));
        taken.insert(id);
        return id;
    };
    auto anonymous = [&](const TerminalKind& kind) -> std::string {
        for (const auto& t : g.terminals)
            if (t.anonymous && t.kind == kind) return t.id;
        std::string id = std::holds_alternative<LiteralTerminal>(kind) ? fresh("_lit", lit_counter)
                                                                        : fresh("_re", re_counter);
        g.terminals.push_back({id, kind, true});
        return id;
    };

    for (const auto& r : rules) {
        for (const auto& alt : r.alternatives) {
            Production p;
            p.index = g.productions.size();
            p.lhs = r.name.text;
            bool epsilon = alt.size() == 1 && alt[0].kind == Lexeme::Kind::Ident &&
                           alt[0].text == "EMPTY" && !lhs_names.count("EMPTY");
            if (!epsilon) {
                for (const auto& item : alt) {
                    switch (item.kind) {
                    case Lexeme::Kind::Ident:
                        if (item.text == "EMPTY" && !lhs_names.count("EMPTY"))
                            throw GrammarSyntaxError("EMPTY must stand alone in an alternative",
                                                     item.line, item.column);
                        if (lhs_names.count(item.text)) {
                            p.rhs.push_back(Symbol::nonterminal(item.text));
                        } else if (g.find_terminal(item.text)) {
                            p.rhs.push_back(Symbol::terminal(item.text));
                        } else {
                            throw Error("undefined_nonterminal",
                                        "line " + std::to_string(item.line) + ": '" + item.text +
                                            "' has no rule");
                        }
                        break;
                    case Lexeme::Kind::String:
                        p.rhs.push_back(Symbol::terminal(anonymous(LiteralTerminal{{item.text}})));
                        break;
                    case Lexeme::Kind::Regex:
                        p.rhs.push_back(Symbol::terminal(anonymous(RegexTerminal{item.text})));
                        break;
                    case Lexeme::Kind::Recognizer:
                        p.rhs.push_back(
                            Symbol::terminal(anonymous(RecognizerTerminal{item.text})));
                        break;
                    default: break;
                    }
                }
            }
            g.productions.push_back(std::move(p));
        }
    }

    g.start = start_header.value_or(g.productions.front().lhs);
    if (!lhs_names.count(g.start))
        throw Error("undefined_nonterminal", "start symbol '" + g.start + "' has no rule");
    return g;
}

Grammar load_grammar_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io_error", "cannot read grammar file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string stem = path;
    if (auto slash = stem.find_last_of('/'); slash != std::string::npos)
        stem = stem.substr(slash + 1);
    if (auto dot = stem.rfind('.'); dot != std::string::npos && dot > 0) stem.resize(dot);
    return parse_grammar_text(buf.str(), stem);
}

namespace {

std::string quote_literal(const std::string& text) {
    std::string out = "\"";
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == '"') {
            out += "\\\"";
        } else if (c == '\\') {
            bool needs = i + 1 == text.size() || text[i + 1] == '"' || text[i + 1] == '\\';
            out += needs ? "\\\\" : "\\";
        } else {
            out += c;
        }
    }
    return out + "\"";
}

std::string quote_regex(const std::string& pattern) {
    std::string out = "/";
    for (char c : pattern) {
        if (c == '/') out += '\\';
        out += c;
    }
    return out + "/";
}

std::string render_kind(const TerminalKind& kind) {
    return std::visit(
        [](const auto& k) -> std::string {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, LiteralTerminal>) {
                std::string out;
                for (std::size_t i = 0; i < k.alternatives.size(); ++i) {
                    if (i) out += " | ";
                    out += quote_literal(k.alternatives[i]);
                }
                return out;
            } else if constexpr (std::is_same_v<K, RegexTerminal>) {
                return quote_regex(k.pattern);
            } else {
                return "@recognizer(" + k.hook + ")";
            }
        },
        kind);
}

}  // namespace

std::string serialize_grammar(const Grammar& grammar) {
    std::ostringstream out;
    for (const auto& m : grammar.modules) out << "// @module " << m << "\n";
    if (grammar.productions.empty() || grammar.start != grammar.productions.front().lhs)
        out << "start: " << grammar.start << ";\n";

    auto render_rhs = [&](const Production& p) {
        if (p.rhs.empty()) return std::string("EMPTY");
        std::string s;
        for (const auto& sym : p.rhs) {
            if (!s.empty()) s += ' ';
            const Terminal* t = sym.is_terminal() ? grammar.find_terminal(sym.name) : nullptr;
            s += (t && t->anonymous) ? render_kind(t->kind) : sym.name;
        }
        return s;
    };

    for (std::size_t i = 0; i < grammar.productions.size();) {
        const auto& lhs = grammar.productions[i].lhs;
        out << lhs << ": " << render_rhs(grammar.productions[i]);
        std::size_t j = i + 1;
        for (; j < grammar.productions.size() && grammar.productions[j].lhs == lhs; ++j)
            out << " | " << render_rhs(grammar.productions[j]);
        out << ";\n";
        i = j;
    }

    bool any_declared = std::any_of(grammar.terminals.begin(), grammar.terminals.end(),
                                    [](const Terminal& t) { return !t.anonymous; });
    if (any_declared) {
        out << "terminals\n";
        for (const auto& t : grammar.terminals)
            if (!t.anonymous) out << t.id << ": " << render_kind(t.kind) << ";\n";
    }
    return out.str();
}

std::string ValidationReport::describe() const {
    auto join = [](const std::vector<std::string>& v) {
        std::string s;
        for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
        return s;
    };
    std::string out;
    auto add = [&](const char* label, const std::vector<std::string>& v) {
        if (v.empty()) return;
        if (!out.empty()) out += "; ";
        out += std::string(label) + ": " + join(v);
    };
    add("cyclic nonterminals", cyclic);
    add("unproductive nonterminals", unproductive);
    add("undefined symbols", undefined);
    add("unreachable nonterminals", unreachable);
    return out.empty() ? "ok" : out;
}

ValidationReport validate(const Grammar& grammar) {
    ValidationReport report;
    const auto names = grammar.nonterminals();
    std::set<std::string> defined(names.begin(), names.end());

    std::set<std::string> undefined;
    for (const auto& p : grammar.productions)
        for (const auto& s : p.rhs) {
            bool known = s.is_terminal() ? grammar.find_terminal(s.name) != nullptr
                                         : defined.count(s.name) > 0;
            if (!known) undefined.insert(s.name);
        }
    if (!defined.count(grammar.start)) undefined.insert(grammar.start);
    report.undefined.assign(undefined.begin(), undefined.end());

    std::set<std::string> nullable;
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto& p : grammar.productions) {
            if (nullable.count(p.lhs)) continue;
            bool all = std::all_of(p.rhs.begin(), p.rhs.end(), [&](const Symbol& s) {
                return !s.is_terminal() && nullable.count(s.name);
            });
            if (all) changed = nullable.insert(p.lhs).second || changed;
        }
    }

    // A -> B is a unit edge when everything around B in some production is nullable.
    std::map<std::string, std::set<std::string>> unit;
    for (const auto& p : grammar.productions) {
        for (std::size_t i = 0; i < p.rhs.size(); ++i) {
            if (p.rhs[i].is_terminal()) continue;
            bool rest_nullable = true;
            for (std::size_t j = 0; j < p.rhs.size() && rest_nullable; ++j)
                if (j != i)
                    rest_nullable = !p.rhs[j].is_terminal() && nullable.count(p.rhs[j].name);
            if (rest_nullable) unit[p.lhs].insert(p.rhs[i].name);
        }
    }
    for (const auto& a : names) {
        std::set<std::string> seen;
        std::vector<std::string> stack(unit[a].begin(), unit[a].end());
        bool cyclic = false;
        while (!stack.empty() && !cyclic) {
            auto n = stack.back();
            stack.pop_back();
            if (n == a) cyclic = true;
            if (!seen.insert(n).second) continue;
            for (const auto& m : unit[n]) stack.push_back(m);
        }
        if (cyclic) report.cyclic.push_back(a);
    }

    std::set<std::string> productive;
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto& p : grammar.productions) {
            if (productive.count(p.lhs)) continue;
            bool all = std::all_of(p.rhs.begin(), p.rhs.end(), [&](const Symbol& s) {
                return s.is_terminal() ? grammar.find_terminal(s.name) != nullptr
                                       : productive.count(s.name) > 0;
            });
            if (all) changed = productive.insert(p.lhs).second || changed;
        }
    }
    for (const auto& a : names)
        if (!productive.count(a)) report.unproductive.push_back(a);

    std::set<std::string> reachable;
    std::vector<std::string> work{grammar.start};
    while (!work.empty()) {
        auto n = work.back();
        work.pop_back();
        if (!reachable.insert(n).second) continue;
        for (const auto* p : grammar.productions_of(n))
            for (const auto& s : p->rhs)
                if (!s.is_terminal()) work.push_back(s.name);
    }
    for (const auto& a : names)
        if (!reachable.count(a)) report.unreachable.push_back(a);
    return report;
}

}  // namespace stexify
