#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "stexify/error.hpp"
#include "stexify/glr.hpp"
#include "stexify/grammar.hpp"

namespace stexify {

/// Named tree whose node names are semantic macro names. A node with a
/// lexeme is a leaf; `verbatim` leaves are emitted as their bare lexeme.
struct AstNode {
    std::string name;
    std::optional<std::string> lexeme;
    bool verbatim = false;
    std::vector<AstNode> children;
    std::set<std::size_t> flexary_slots;  // child positions holding list nodes

    bool is_leaf() const { return lexeme.has_value(); }

    static AstNode leaf(std::string name, std::string lexeme);
    static AstNode raw(std::string name, std::string lexeme);
    static AstNode node(std::string name, std::vector<AstNode> children,
                        std::set<std::size_t> flexary_slots = {});

    friend bool operator==(const AstNode&, const AstNode&) = default;
};

/// `{"name","lexeme"}` for leaves, `{"name","children"}` otherwise. With
/// `layout`, flexary slots and verbatim flags are included so that
/// ast_from_json restores the node exactly.
nlohmann::json ast_to_json(const AstNode& ast, bool layout = false);
AstNode ast_from_json(const nlohmann::json& j);

/// Compact one-line rendering, e.g. `abs(varlist[var x], var x)`.
std::string ast_to_string(const AstNode& ast);

struct Action {
    enum class Kind { PassThrough, Node, FlattenList, LeafFromToken, DropLiterals };
    Kind kind = Kind::Node;
    std::optional<std::string> rename;
    std::optional<std::vector<std::size_t>> keep;  // rhs positions, 0-based
    bool verbatim = false;                         // LeafFromToken only

    friend bool operator==(const Action&, const Action&) = default;
};

struct TerminalAction {
    enum class Kind { Leaf, Raw, Drop };
    Kind kind = Kind::Leaf;
    std::optional<std::string> rename;

    friend bool operator==(const TerminalAction&, const TerminalAction&) = default;
};

struct ActionTable {
    std::map<std::string, Action> nonterminals;
    std::map<std::string, TerminalAction> terminals;

    const Action& for_nonterminal(const std::string& name) const;
    const TerminalAction& for_terminal(const std::string& id) const;

    friend bool operator==(const ActionTable&, const ActionTable&) = default;
};

class ActionMismatch : public Error {
public:
    explicit ActionMismatch(const std::string& message) : Error("action_mismatch", message) {}
};

ActionTable default_actions(const Grammar& grammar);

/// Sidecar format: object mapping a symbol name to a descriptor
/// `{"action": pass|node|flatten|leaf|drop|raw, "rename"?, "keep"?, "verbatim"?}`.
/// Entries override the defaults; unknown names are an error.
void apply_overlay(ActionTable& table, const Grammar& grammar, const nlohmann::json& overlay);
nlohmann::json actions_to_json(const ActionTable& table);

/// Defaults plus the overlay in `path`.
ActionTable load_actions(const Grammar& grammar, const std::string& path);

/// `foo.grammar` -> `foo.actions.json`.
std::string sidecar_path_for(const std::string& grammar_path);

AstNode build_ast(const Grammar& grammar, const ParseTree& tree, const ActionTable& actions);

}  // namespace stexify
