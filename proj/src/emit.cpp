#include "stexify/emit.hpp"

namespace stexify {

namespace {

class Emitter {
public:
    explicit Emitter(const EmitterConfig& c) : c_(c) {
        if (c_.flexary_separator.empty()) throw Error("invalid_config", "flexary separator must be nonempty");
    }

    void node(const AstNode& n) {
        if (n.is_leaf()) {
            if (n.verbatim) {
                out_ += *n.lexeme;
            } else {
                out_ += c_.macro_prefix + n.name + "{" + *n.lexeme + "}";
            }
            return;
        }
        if (n.name == "dobrackets" && c_.dobrackets_style == DobracketsStyle::PlainParens) {
            out_ += '(';
            for (std::size_t i = 0; i < n.children.size(); ++i) argument(n, i);
            out_ += ')';
            return;
        }
        out_ += c_.macro_prefix + n.name;
        for (std::size_t i = 0; i < n.children.size(); ++i) {
            out_ += '{';
            argument(n, i);
            out_ += '}';
        }
    }

    std::string take() { return std::move(out_); }

private:
    void argument(const AstNode& parent, std::size_t i) {
        const AstNode& child = parent.children[i];
        if (!parent.flexary_slots.count(i)) {
            node(child);
            return;
        }
        if (child.is_leaf()) {
            node(child);
            return;
        }
        if (child.children.empty()) throw EmptyFlexary(parent.name);
        for (std::size_t k = 0; k < child.children.size(); ++k) {
            if (k) out_ += c_.flexary_separator;
            node(child.children[k]);
        }
    }

    const EmitterConfig& c_;
    std::string out_;
};

}  // namespace

std::string emit(const AstNode& ast, const EmitterConfig& config) {
    Emitter e(config);
    e.node(ast);
    return e.take();
}

DobracketsStyle parse_dobrackets_style(const std::string& text) {
    if (text == "macro") return DobracketsStyle::Macro;
    if (text == "parens") return DobracketsStyle::PlainParens;
    throw Error("invalid_argument", "dobrackets style must be 'macro' or 'parens', got '" + text + "'");
}

}  // namespace stexify
