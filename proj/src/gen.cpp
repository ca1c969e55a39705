// sTeX declaration scanning and grammar generation.

#include "stexify/gen.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "stexify/glr.hpp"

namespace stexify {

namespace {

bool is_letter(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

const std::set<std::string> kSpacing = {";", ",", " ", "!", ":", ">", "quad", "qquad", "enspace", "thinspace",
                                        "medspace", "thickspace"};
const std::set<std::string> kWrappers = {"mathbin", "mathrel", "mathop", "mathord", "mathpunct",
                                         "mathrm", "mathit", "mathsf", "mathtt", "text", "textrm",
                                         "operatorname"};

// Cursor over TeX source with balanced-group reading.
class Reader {
public:
    Reader(std::string_view s, std::size_t base_line) : s_(s), base_line_(base_line) {}

    bool done() const { return i_ >= s_.size(); }
    char peek() const { return s_[i_]; }
    std::size_t pos() const { return i_; }
    void advance(std::size_t n = 1) { i_ += n; }

    std::size_t line_at(std::size_t pos) const {
        return base_line_ + static_cast<std::size_t>(std::count(s_.begin(), s_.begin() + pos, '\n'));
    }

    [[noreturn]] void fail(const std::string& message) const { throw MalformedDeclaration(line_at(i_), message); }

    void skip_space() {
        while (!done()) {
            if (is_space(peek())) {
                ++i_;
            } else if (peek() == '%') {
                while (!done() && peek() != '\n') ++i_;
            } else {
                break;
            }
        }
    }

    // Name after a backslash at i_: a letter run or one character.
    std::string control_name() {
        ++i_;  // backslash
        if (done()) fail("dangling backslash");
        std::size_t b = i_;
        if (is_letter(peek())) {
            while (!done() && is_letter(peek())) ++i_;
        } else {
            ++i_;
        }
        return std::string(s_.substr(b, i_ - b));
    }

    // Contents of the balanced group opening at i_ with `open`.
    std::string group(char open, char close) {
        if (done() || peek() != open) fail(std::string("expected '") + open + "'");
        std::size_t start = ++i_;
        int depth = 0;
        while (!done()) {
            char c = peek();
            if (c == '\\') {
                i_ += 2;
                continue;
            }
            if (c == '{') ++depth;
            if (c == '}') {
                if (depth == 0 && close == '}') return std::string(s_.substr(start, i_++ - start));
                --depth;
            }
            if (c == close && close != '}' && depth == 0) return std::string(s_.substr(start, i_++ - start));
            ++i_;
        }
        i_ = start - 1;
        fail(std::string("unbalanced '") + open + "'");
    }

    // One macro argument: a braced group or a single token.
    std::string argument() {
        skip_space();
        if (done()) fail("missing argument");
        if (peek() == '{') return group('{', '}');
        if (peek() == '\\') {
            std::size_t b = i_;
            control_name();
            return std::string(s_.substr(b, i_ - b));
        }
        if (peek() == '#' && i_ + 1 < s_.size()) {
            i_ += 2;
            return std::string(s_.substr(i_ - 2, 2));
        }
        return std::string(1, s_[i_++]);
    }

private:
    std::string_view s_;
    std::size_t base_line_;
    std::size_t i_ = 0;
};

struct Body {
    std::vector<TemplateToken> tokens;
    std::map<std::size_t, std::string> separators;  // argsep'd arguments
};

class TemplateParser {
public:
    explicit TemplateParser(std::size_t line) : line_(line) {}

    Body parse(std::string_view body) {
        run(body);
        flush();
        return std::move(out_);
    }

    // Literal text of a component: wrappers and spacing removed, no arguments.
    std::string text_of(std::string_view s) {
        TemplateParser inner(line_);
        Body b = inner.parse(s);
        std::string text;
        for (const auto& t : b.tokens) {
            if (t.kind == TemplateToken::Kind::ArgRef)
                throw MalformedDeclaration(line_, "argument reference inside a literal component");
            text += t.text;
        }
        return text;
    }

private:
    void flush() {
        if (!text_.empty()) out_.tokens.push_back(TemplateToken::literal(std::move(text_)));
        text_.clear();
    }

    void run(std::string_view s) {
        Reader r(s, line_);
        while (!r.done()) {
            char c = r.peek();
            if (c == '#') {
                r.advance();
                if (r.done() || !std::isdigit(static_cast<unsigned char>(r.peek())))
                    r.fail("'#' must be followed by an argument number");
                flush();
                out_.tokens.push_back(TemplateToken::arg(static_cast<std::size_t>(r.peek() - '0')));
                r.advance();
            } else if (is_space(c) || c == '~') {
                flush();
                r.advance();
            } else if (c == '%') {
                flush();
                r.skip_space();
            } else if (c == '{') {
                flush();
                run(r.group('{', '}'));
            } else if (c == '}') {
                r.fail("unbalanced '}'");
            } else if (c == '\\') {
                control(r);
            } else {
                text_ += c;
                r.advance();
            }
        }
    }

    void control(Reader& r) {
        std::string name = r.control_name();
        if (kSpacing.count(name)) {
            flush();
        } else if (name == "comp") {
            std::string arg = r.argument();
            flush();
            std::string text = text_of(arg);
            if (!text.empty()) out_.tokens.push_back(TemplateToken::literal(text));
        } else if (name == "argsep") {
            std::string target = trim(r.argument());
            std::string sep = r.argument();
            if (target.size() != 2 || target[0] != '#' || !std::isdigit(static_cast<unsigned char>(target[1])))
                r.fail("\\argsep needs an argument reference as its first argument");
            flush();
            std::size_t k = static_cast<std::size_t>(target[1] - '0');
            out_.tokens.push_back(TemplateToken::arg(k));
            out_.separators[k] = text_of(sep);
        } else if (kWrappers.count(name)) {
            std::string arg = r.argument();
            flush();
            run(arg);
        } else {
            flush();
            text_ = "\\" + name;
            flush();
        }
    }

    std::size_t line_;
    Body out_;
    std::string text_;
};

struct Declaration {
    std::string command;  // symdef | notation
    std::string name;
    std::string options;
    std::optional<std::string> body;
    std::size_t line;
};

std::vector<std::pair<std::string, std::string>> split_options(const std::string& opts) {
    std::vector<std::pair<std::string, std::string>> out;
    int depth = 0;
    std::string cur;
    auto push = [&] {
        std::string item = trim(cur);
        cur.clear();
        if (item.empty()) return;
        auto eq = item.find('=');
        if (eq == std::string::npos) {
            out.emplace_back(item, "");
        } else {
            out.emplace_back(trim(item.substr(0, eq)), trim(item.substr(eq + 1)));
        }
    };
    for (char c : opts) {
        if (c == '{') ++depth;
        if (c == '}') --depth;
        if (c == ',' && depth == 0) {
            push();
        } else {
            cur += c;
        }
    }
    push();
    return out;
}

std::optional<std::vector<ArgKind>> parse_args_option(const Declaration& d) {
    for (const auto& [key, value] : split_options(d.options)) {
        if (key != "args") continue;
        std::string v = value;
        if (!v.empty() && v.front() == '{' && v.back() == '}') v = trim(v.substr(1, v.size() - 2));
        if (v.empty()) throw MalformedDeclaration(d.line, "empty args= option for " + d.name);
        if (std::all_of(v.begin(), v.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
            std::size_t n = std::stoul(v);
            if (n > 9) throw MalformedDeclaration(d.line, "at most 9 arguments are supported");
            return std::vector<ArgKind>(n);
        }
        std::vector<ArgKind> kinds;
        for (char c : v) {
            ArgKind k;
            switch (c) {
            case 'i': k.kind = ArgKind::Kind::Single; break;
            case 'a': k.kind = ArgKind::Kind::Flexary; break;
            case 'b': k.kind = ArgKind::Kind::Binder; break;
            case 'B': k.kind = ArgKind::Kind::BinderSequence; break;
            default: throw MalformedDeclaration(d.line, std::string("unknown argument mode '") + c + "'");
            }
            if (k.kind == ArgKind::Kind::Flexary || k.kind == ArgKind::Kind::BinderSequence) k.separator = ",";
            kinds.push_back(k);
        }
        if (kinds.size() > 9) throw MalformedDeclaration(d.line, "at most 9 arguments are supported");
        return kinds;
    }
    return std::nullopt;
}

bool is_list(const ArgKind& k) {
    return k.kind == ArgKind::Kind::Flexary || k.kind == ArgKind::Kind::BinderSequence;
}

std::vector<Declaration> find_declarations(std::string_view src, std::vector<std::string>& modules) {
    std::vector<Declaration> out;
    Reader r(src, 1);
    while (!r.done()) {
        char c = r.peek();
        if (c == '%') {
            r.skip_space();
            continue;
        }
        if (c != '\\') {
            r.advance();
            continue;
        }
        std::size_t at = r.pos();
        std::string name = r.control_name();
        if (name == "begin") {
            r.skip_space();
            if (r.done() || r.peek() != '{') continue;
            if (trim(r.group('{', '}')) != "smodule") continue;
            r.skip_space();
            if (!r.done() && r.peek() == '[') r.group('[', ']');
            r.skip_space();
            modules.push_back(trim(r.group('{', '}')));
            continue;
        }
        if (name != "symdef" && name != "notation") continue;
        Declaration d;
        d.command = name;
        d.line = r.line_at(at);
        r.skip_space();
        if (r.done() || r.peek() != '{') throw MalformedDeclaration(d.line, "\\" + name + " needs a {name}");
        d.name = trim(r.group('{', '}'));
        if (!is_identifier(d.name) || d.name.find('_') != std::string::npos ||
            std::any_of(d.name.begin(), d.name.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); }))
            throw MalformedDeclaration(d.line, "'" + d.name + "' is not a macro name");
        r.skip_space();
        if (!r.done() && r.peek() == '[') d.options = r.group('[', ']');
        r.skip_space();
        if (!r.done() && r.peek() == '{') d.body = r.group('{', '}');
        if (name == "notation" && !d.body) throw MalformedDeclaration(d.line, "\\notation{" + d.name + "} has no body");
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace

ScanResult scan_stex_source(std::string_view source) {
    ScanResult result;
    std::map<std::string, std::size_t> index;
    for (const auto& d : find_declarations(source, result.modules)) {
        auto declared = parse_args_option(d);
        auto existing = index.find(d.name);

        MacroSpec spec;
        spec.name = d.name;
        spec.line = d.line;
        if (declared) {
            spec.arg_kinds = *declared;
        } else if (existing != index.end()) {
            spec.arg_kinds = result.specs[existing->second].arg_kinds;
        }
        if (!d.body) {
            // Symbol without notation: nothing to parse until a \notation arrives.
            if (existing == index.end()) continue;
            result.specs[existing->second].arg_kinds = spec.arg_kinds;
            continue;
        }

        Body body = TemplateParser(d.line).parse(*d.body);
        std::size_t max_ref = 0;
        std::set<std::size_t> seen;
        for (const auto& t : body.tokens) {
            if (t.kind != TemplateToken::Kind::ArgRef) continue;
            if (t.index == 0) throw MalformedDeclaration(d.line, "argument #0 in " + d.name);
            if (!seen.insert(t.index).second)
                throw MalformedDeclaration(d.line, "argument #" + std::to_string(t.index) + " used twice in " + d.name);
            max_ref = std::max(max_ref, t.index);
        }
        if (!declared && existing == index.end()) spec.arg_kinds.resize(max_ref);
        if (max_ref > spec.arg_kinds.size())
            throw MalformedDeclaration(d.line, d.name + " references #" + std::to_string(max_ref) + " but takes " +
                                                   std::to_string(spec.arg_kinds.size()) + " arguments");
        for (const auto& [k, sep] : body.separators) {
            auto& kind = spec.arg_kinds[k - 1];
            if (!is_list(kind)) kind.kind = kind.kind == ArgKind::Kind::Binder ? ArgKind::Kind::BinderSequence
                                                                                : ArgKind::Kind::Flexary;
            kind.separator = sep;
        }
        spec.arity = spec.arg_kinds.size();
        spec.tmpl = std::move(body.tokens);

        if (existing != index.end()) {
            result.specs[existing->second] = std::move(spec);
        } else {
            index[d.name] = result.specs.size();
            result.specs.push_back(std::move(spec));
        }
    }
    return result;
}

void merge_scan(ScanResult& into, ScanResult more) {
    for (auto& spec : more.specs) {
        auto it = std::find_if(into.specs.begin(), into.specs.end(),
                               [&](const MacroSpec& s) { return s.name == spec.name; });
        if (it != into.specs.end()) {
            *it = std::move(spec);
        } else {
            into.specs.push_back(std::move(spec));
        }
    }
    for (auto& m : more.modules)
        if (std::find(into.modules.begin(), into.modules.end(), m) == into.modules.end())
            into.modules.push_back(std::move(m));
}

namespace {

std::string quote(const std::string& text) {
    std::string out = "\"";
    for (char c : text) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

std::string render_terminal(const TerminalKind& kind) {
    if (auto* l = std::get_if<LiteralTerminal>(&kind)) {
        std::string s;
        for (const auto& alt : l->alternatives) s += (s.empty() ? "" : " | ") + quote(alt);
        return s;
    }
    if (auto* re = std::get_if<RegexTerminal>(&kind)) {
        std::string s = "/";
        for (char c : re->pattern) s += c == '/' ? std::string("\\/") : std::string(1, c);
        return s + "/";
    }
    return "@recognizer(" + std::get<RecognizerTerminal>(kind).hook + ")";
}

bool is_atom_marker(const MacroSpec& s) {
    return s.arity == 1 && s.arg_kinds[0].kind == ArgKind::Kind::Single && s.tmpl.size() == 1 &&
           s.tmpl[0].kind == TemplateToken::Kind::ArgRef;
}

}  // namespace

GeneratedGrammar generate_grammar(const std::vector<MacroSpec>& specs, const GenConfig& config,
                                  const std::vector<std::string>& modules) {
    GeneratedGrammar out;
    const std::string& E = config.expression_symbol;

    std::string atom = config.atom_name;
    const MacroSpec* marker = nullptr;
    for (const auto& s : specs) {
        if (!is_atom_marker(s)) continue;
        if (marker) {
            out.warnings.push_back({GenWarning::Kind::DuplicateAtom, s.name,
                                    s.name + " also has notation #1; only " + marker->name + " names atoms"});
            continue;
        }
        marker = &s;
        atom = s.name;
    }

    auto reserved = [&](const std::string& n) {
        return n == "parens" || n.rfind("sym_", 0) == 0 || n.rfind("list_", 0) == 0;
    };
    if (!is_identifier(E) || reserved(E)) throw NameCollision("expression symbol '" + E + "' is reserved or invalid");
    if (!is_identifier(atom) || reserved(atom) || atom == E)
        throw NameCollision("atom terminal '" + atom + "' collides with a generated name");
    std::set<std::string> names;
    for (const auto& s : specs)
        if (!names.insert(s.name).second) throw NameCollision("macro " + s.name + " is specified twice");

    std::vector<std::string> alternatives;
    std::string rules;
    std::map<std::string, Action> actions;

    for (const auto& s : specs) {
        if (&s == marker) continue;
        if (is_atom_marker(s)) continue;
        if (s.tmpl.empty()) {
            out.warnings.push_back({GenWarning::Kind::EmptyTemplate, s.name, s.name + " has an empty notation; skipped"});
            continue;
        }
        bool has_literal = std::any_of(s.tmpl.begin(), s.tmpl.end(),
                                       [](const TemplateToken& t) { return t.kind == TemplateToken::Kind::Literal; });
        if (!has_literal && s.arity >= 2)
            out.warnings.push_back({GenWarning::Kind::UnresolvableTemplate, s.name,
                                    s.name + " has no literal anchor; its rule matches bare juxtaposition and "
                                             "should be edited by hand"});
        std::set<std::size_t> used;
        for (const auto& t : s.tmpl)
            if (t.kind == TemplateToken::Kind::ArgRef) used.insert(t.index);
        for (std::size_t k = 1; k <= s.arity; ++k)
            if (!used.count(k))
                out.warnings.push_back({GenWarning::Kind::UnusedArgument, s.name,
                                        s.name + " never shows argument #" + std::to_string(k)});

        bool lone = s.tmpl.size() == 1 && s.tmpl[0].kind == TemplateToken::Kind::ArgRef &&
                    s.arg_kinds[s.tmpl[0].index - 1].kind == ArgKind::Kind::Flexary;
        std::string sym = "sym_" + s.name;
        std::string rhs;
        for (const auto& t : s.tmpl) {
            if (!rhs.empty()) rhs += ' ';
            if (t.kind == TemplateToken::Kind::Literal) {
                rhs += quote(t.text);
                continue;
            }
            const ArgKind& k = s.arg_kinds[t.index - 1];
            if (k.kind == ArgKind::Kind::Single) {
                rhs += E;
                continue;
            }
            if (k.kind == ArgKind::Kind::Binder) {
                rhs += atom;
                continue;
            }
            std::string list = "list_" + s.name + "_" + std::to_string(t.index);
            std::string member = k.kind == ArgKind::Kind::Flexary ? E : atom;
            std::string sep = k.separator.empty() ? " " : " " + quote(k.separator) + " ";
            rhs += list;
            std::string tail = lone ? member + sep + member : member;
            rules += list + ": " + member + sep + list + " | " + tail + ";\n";
            actions[list] = Action{Action::Kind::FlattenList, {}, {}, false};
        }
        rules = sym + ": " + rhs + ";\n" + rules;
        alternatives.push_back(sym);
        actions[sym] = Action{Action::Kind::Node, s.name, {}, false};
        out.text += rules;
        rules.clear();
    }
    alternatives.push_back(atom);
    if (config.include_parentheses_rule) {
        alternatives.push_back("parens");
        out.text += "parens: \"(\" " + E + " \")\";\n";
        actions["parens"] = Action{Action::Kind::Node, std::string("dobrackets"), std::vector<std::size_t>{1}, false};
    }
    actions[E] = Action{Action::Kind::PassThrough, {}, {}, false};

    std::string head;
    for (const auto& m : modules) head += "// @module " + m + "\n";
    head += E + ":";
    for (std::size_t i = 0; i < alternatives.size(); ++i) head += (i ? " | " : " ") + alternatives[i];
    head += ";\n";
    std::string source = head + out.text + "terminals\n" + atom + ": " + render_terminal(config.atom_terminal) + ";\n";

    Grammar g = parse_grammar_text(source, "generated");
    auto report = validate(g);
    if (!report.ok()) throw InvalidGrammar(std::move(report));

    out.actions = default_actions(g);
    for (auto& [name, a] : actions) out.actions.nonterminals[name] = a;
    out.text = serialize_grammar(g);
    out.grammar = std::move(g);
    return out;
}

}  // namespace stexify
