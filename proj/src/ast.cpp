#include "stexify/ast.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

namespace stexify {

using nlohmann::json;

AstNode AstNode::leaf(std::string name, std::string lexeme) {
    AstNode n;
    n.name = std::move(name);
    n.lexeme = std::move(lexeme);
    return n;
}

AstNode AstNode::raw(std::string name, std::string lexeme) {
    AstNode n = leaf(std::move(name), std::move(lexeme));
    n.verbatim = true;
    return n;
}

AstNode AstNode::node(std::string name, std::vector<AstNode> children, std::set<std::size_t> flexary_slots) {
    AstNode n;
    n.name = std::move(name);
    n.children = std::move(children);
    n.flexary_slots = std::move(flexary_slots);
    return n;
}

json ast_to_json(const AstNode& ast, bool layout) {
    json j;
    j["name"] = ast.name;
    if (ast.is_leaf()) {
        j["lexeme"] = *ast.lexeme;
        if (layout && ast.verbatim) j["verbatim"] = true;
        return j;
    }
    j["children"] = json::array();
    for (const auto& c : ast.children) j["children"].push_back(ast_to_json(c, layout));
    if (layout && !ast.flexary_slots.empty()) j["flexary"] = ast.flexary_slots;
    return j;
}

AstNode ast_from_json(const json& j) {
    if (!j.is_object() || !j.contains("name") || !j["name"].is_string())
        throw Error("invalid_ast", "AST node must be an object with a string \"name\"");
    AstNode n;
    n.name = j["name"].get<std::string>();
    if (j.contains("lexeme")) {
        n.lexeme = j["lexeme"].get<std::string>();
        n.verbatim = j.value("verbatim", false);
        return n;
    }
    for (const auto& c : j.value("children", json::array())) n.children.push_back(ast_from_json(c));
    for (std::size_t slot : j.value("flexary", std::vector<std::size_t>{})) {
        if (slot >= n.children.size()) throw Error("invalid_ast", "flexary slot out of range");
        n.flexary_slots.insert(slot);
    }
    return n;
}

namespace {

void render(const AstNode& n, bool as_list, std::string& out) {
    if (n.is_leaf()) {
        out += n.verbatim ? *n.lexeme : n.name + " " + *n.lexeme;
        return;
    }
    out += n.name;
    out += as_list ? '[' : '(';
    for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i) out += ", ";
        render(n.children[i], n.flexary_slots.count(i) > 0, out);
    }
    out += as_list ? ']' : ')';
}

bool is_literal_terminal(const Grammar& g, const std::string& id) {
    const Terminal* t = g.find_terminal(id);
    return t && std::holds_alternative<LiteralTerminal>(t->kind);
}

bool is_right_recursive_list(const Grammar& g, const std::string& nt) {
    bool recursive = false, base = false;
    for (const Production* p : g.productions_of(nt)) {
        auto occurrences = std::count(p->rhs.begin(), p->rhs.end(), Symbol::nonterminal(nt));
        if (occurrences == 0) {
            base = true;
        } else if (occurrences == 1 && p->rhs.size() >= 2 && p->rhs.back() == Symbol::nonterminal(nt)) {
            recursive = true;
        } else {
            return false;
        }
    }
    return recursive && base;
}

const Action kDefaultNode{};
const TerminalAction kDefaultLeaf{};

}  // namespace

std::string ast_to_string(const AstNode& ast) {
    std::string out;
    render(ast, false, out);
    return out;
}

const Action& ActionTable::for_nonterminal(const std::string& name) const {
    auto it = nonterminals.find(name);
    return it == nonterminals.end() ? kDefaultNode : it->second;
}

const TerminalAction& ActionTable::for_terminal(const std::string& id) const {
    auto it = terminals.find(id);
    return it == terminals.end() ? kDefaultLeaf : it->second;
}

ActionTable default_actions(const Grammar& grammar) {
    ActionTable table;
    for (const auto& t : grammar.terminals) {
        TerminalAction a;
        if (std::holds_alternative<LiteralTerminal>(t.kind)) a.kind = TerminalAction::Kind::Drop;
        table.terminals[t.id] = a;
    }
    for (const auto& nt : grammar.nonterminals()) {
        Action a;
        if (is_right_recursive_list(grammar, nt)) {
            a.kind = Action::Kind::FlattenList;
        } else {
            bool single = true;
            for (const Production* p : grammar.productions_of(nt)) {
                auto kept = std::count_if(p->rhs.begin(), p->rhs.end(), [&](const Symbol& s) {
                    return !s.is_terminal() || !is_literal_terminal(grammar, s.name);
                });
                single = single && kept == 1;
            }
            if (single) a.kind = Action::Kind::PassThrough;
        }
        table.nonterminals[nt] = a;
    }
    return table;
}

namespace {

const std::map<std::string, Action::Kind> kNonterminalKinds = {
    {"pass", Action::Kind::PassThrough}, {"node", Action::Kind::Node},
    {"flatten", Action::Kind::FlattenList}, {"leaf", Action::Kind::LeafFromToken},
    {"drop", Action::Kind::DropLiterals}};

const std::map<std::string, TerminalAction::Kind> kTerminalKinds = {
    {"leaf", TerminalAction::Kind::Leaf}, {"raw", TerminalAction::Kind::Raw},
    {"drop", TerminalAction::Kind::Drop}};

template <typename Map, typename Kind>
std::string kind_name(const Map& m, Kind k) {
    for (const auto& [name, kind] : m)
        if (kind == k) return name;
    return {};
}

Error bad_overlay(const std::string& message) { return Error("invalid_actions", message); }

std::optional<std::string> read_rename(const std::string& key, const json& d) {
    if (!d.contains("rename")) return std::nullopt;
    if (!d["rename"].is_string() || !is_identifier(d["rename"].get<std::string>()))
        throw bad_overlay("\"rename\" of " + key + " must be an identifier");
    return d["rename"].get<std::string>();
}

}  // namespace

void apply_overlay(ActionTable& table, const Grammar& grammar, const json& overlay) {
    if (!overlay.is_object()) throw bad_overlay("action table must be a JSON object");
    for (const auto& [key, d] : overlay.items()) {
        if (!d.is_object() || !d.contains("action") || !d["action"].is_string())
            throw bad_overlay("entry " + key + " needs an \"action\" string");
        std::string kind = d["action"].get<std::string>();
        if (grammar.is_nonterminal(key)) {
            auto k = kNonterminalKinds.find(kind);
            if (k == kNonterminalKinds.end()) throw bad_overlay("unknown action '" + kind + "' for " + key);
            Action a;
            a.kind = k->second;
            a.rename = read_rename(key, d);
            if (d.contains("keep")) {
                if (!d["keep"].is_array()) throw bad_overlay("\"keep\" of " + key + " must be an array");
                std::vector<std::size_t> keep;
                for (const auto& v : d["keep"]) {
                    if (!v.is_number_unsigned()) throw bad_overlay("\"keep\" of " + key + " must hold positions");
                    keep.push_back(v.get<std::size_t>());
                }
                a.keep = keep;
            }
            a.verbatim = d.value("verbatim", false);
            table.nonterminals[key] = a;
        } else if (grammar.find_terminal(key)) {
            auto k = kTerminalKinds.find(kind);
            if (k == kTerminalKinds.end()) throw bad_overlay("unknown action '" + kind + "' for terminal " + key);
            table.terminals[key] = {k->second, read_rename(key, d)};
        } else {
            throw bad_overlay("action table names unknown symbol " + key);
        }
    }
}

json actions_to_json(const ActionTable& table) {
    json j = json::object();
    for (const auto& [name, a] : table.nonterminals) {
        json d{{"action", kind_name(kNonterminalKinds, a.kind)}};
        if (a.rename) d["rename"] = *a.rename;
        if (a.keep) d["keep"] = *a.keep;
        if (a.verbatim) d["verbatim"] = true;
        j[name] = d;
    }
    for (const auto& [id, a] : table.terminals) {
        json d{{"action", kind_name(kTerminalKinds, a.kind)}};
        if (a.rename) d["rename"] = *a.rename;
        j[id] = d;
    }
    return j;
}

ActionTable load_actions(const Grammar& grammar, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io_error", "cannot read action table " + path);
    json overlay;
    try {
        overlay = json::parse(in);
    } catch (const json::exception& e) {
        throw bad_overlay(path + ": " + e.what());
    }
    ActionTable table = default_actions(grammar);
    apply_overlay(table, grammar, overlay);
    return table;
}

std::string sidecar_path_for(const std::string& grammar_path) {
    std::filesystem::path p(grammar_path);
    p.replace_extension(".actions.json");
    return p.string();
}

namespace {

struct Built {
    enum class Kind { Dropped, Single, List };
    Kind kind = Kind::Dropped;
    AstNode node;  // for lists: name = list nonterminal, children = members
};

class Builder {
public:
    Builder(const Grammar& g, const ActionTable& a) : g_(g), actions_(a) {}

    Built build(const ParseTree& t) const {
        if (t.is_leaf()) return terminal(t.token);
        const Production& p = g_.productions.at(t.production);
        if (t.children.size() != p.rhs.size())
            throw ActionMismatch("tree does not match production " + std::to_string(p.index));
        const Action& a = actions_.for_nonterminal(p.lhs);
        std::string name = a.rename.value_or(p.lhs);

        switch (a.kind) {
        case Action::Kind::DropLiterals:
            return {};
        case Action::Kind::LeafFromToken: {
            std::string text;
            for (const auto& lex : frontier(t)) text += lex;
            return {Built::Kind::Single, a.verbatim ? AstNode::raw(name, text) : AstNode::leaf(name, text)};
        }
        case Action::Kind::FlattenList: {
            Built out{Built::Kind::List, AstNode::node(name, {})};
            for (std::size_t i : positions(a, p)) {
                Built c = build(t.children[i]);
                if (c.kind == Built::Kind::Dropped) continue;
                if (c.kind == Built::Kind::List && c.node.name == name) {
                    for (auto& m : c.node.children) out.node.children.push_back(std::move(m));
                } else {
                    out.node.children.push_back(std::move(c.node));
                }
            }
            return out;
        }
        case Action::Kind::PassThrough: {
            std::vector<Built> kids;
            for (std::size_t i : positions(a, p)) {
                Built c = build(t.children[i]);
                if (c.kind != Built::Kind::Dropped) kids.push_back(std::move(c));
            }
            if (kids.size() == 1) return std::move(kids.front());
            return assemble(name, std::move(kids));
        }
        case Action::Kind::Node: {
            std::vector<Built> kids;
            for (std::size_t i : positions(a, p)) kids.push_back(build(t.children[i]));
            return assemble(name, std::move(kids));
        }
        }
        return {};
    }

private:
    Built terminal(const Token& tok) const {
        const TerminalAction& a = actions_.for_terminal(tok.terminal_id);
        std::string name = a.rename.value_or(tok.terminal_id);
        switch (a.kind) {
        case TerminalAction::Kind::Drop: return {};
        case TerminalAction::Kind::Raw: return {Built::Kind::Single, AstNode::raw(name, tok.lexeme)};
        case TerminalAction::Kind::Leaf: break;
        }
        return {Built::Kind::Single, AstNode::leaf(name, tok.lexeme)};
    }

    std::vector<std::size_t> positions(const Action& a, const Production& p) const {
        std::vector<std::size_t> out;
        if (!a.keep) {
            for (std::size_t i = 0; i < p.rhs.size(); ++i) out.push_back(i);
            return out;
        }
        for (std::size_t i : *a.keep) {
            if (i >= p.rhs.size())
                throw ActionMismatch("keep position " + std::to_string(i) + " out of range for a production of " +
                                     p.lhs + " with " + std::to_string(p.rhs.size()) + " symbols");
            out.push_back(i);
        }
        return out;
    }

    static Built assemble(const std::string& name, std::vector<Built> kids) {
        Built out{Built::Kind::Single, AstNode::node(name, {})};
        for (auto& c : kids) {
            if (c.kind == Built::Kind::Dropped) continue;
            if (c.kind == Built::Kind::List) out.node.flexary_slots.insert(out.node.children.size());
            out.node.children.push_back(std::move(c.node));
        }
        return out;
    }

    const Grammar& g_;
    const ActionTable& actions_;
};

}  // namespace

AstNode build_ast(const Grammar& grammar, const ParseTree& tree, const ActionTable& actions) {
    Built b = Builder(grammar, actions).build(tree);
    if (b.kind == Built::Kind::Dropped) return AstNode::node(grammar.start, {});
    return std::move(b.node);
}

}  // namespace stexify
