#include <gtest/gtest.h>

#include <random>

#include "stexify/emit.hpp"
#include "support/fixtures.hpp"

using namespace stexify;
using stexify::testing::data_path;
using stexify::testing::lambda_grammar;

namespace {

const RecognizerRegistry kRegistry = RecognizerRegistry::with_builtins();

AstNode var(const std::string& x) { return AstNode::leaf("var", x); }
AstNode raw(const std::string& x) { return AstNode::raw("meta", x); }
AstNode abs(std::vector<AstNode> vars, AstNode body) {
    return AstNode::node("abs", {AstNode::node("varlist", std::move(vars)), std::move(body)}, {0});
}
AstNode app(AstNode a, AstNode b) { return AstNode::node("app", {std::move(a), std::move(b)}); }
AstNode dob(AstNode a) { return AstNode::node("dobrackets", {std::move(a)}); }

struct Lambda {
    Grammar grammar = lambda_grammar();
    CompiledGrammar compiled = compile(grammar);
    ActionTable actions = load_actions(grammar, data_path("lambda.actions.json"));

    std::vector<AstNode> asts(const std::string& input) const {
        std::vector<AstNode> out;
        for (const auto& t : enumerate_trees(parse(compiled, input, kRegistry)))
            out.push_back(build_ast(grammar, t, actions));
        return out;
    }
};

const Lambda& lambda() {
    static const Lambda l;
    return l;
}

// Test-only inverse of the emitter: fully parenthesised plain notation.
std::string plain(const AstNode& n, bool bracketed = false) {
    if (n.is_leaf()) return *n.lexeme;
    if (n.name == "dobrackets") return "(" + plain(n.children[0], true) + ")";
    std::string body;
    if (n.name == "app") body = plain(n.children[0]) + " " + plain(n.children[1]);
    if (n.name == "abs") {
        body = "\\lambda ";
        for (const auto& v : n.children[0].children) body += plain(v) + " ";
        body += ". " + plain(n.children[1]);
    }
    return bracketed ? body : "(" + body + ")";
}

// What the plain printer adds: a dobrackets around each app/abs not already bracketed.
AstNode bracketed(const AstNode& n, bool inside = false) {
    if (n.is_leaf()) return n;
    AstNode copy = n;
    for (std::size_t i = 0; i < copy.children.size(); ++i)
        copy.children[i] = bracketed(n.children[i], n.name == "dobrackets");
    if ((n.name == "app" || n.name == "abs") && !inside) return dob(copy);
    return copy;
}

const std::vector<std::string> kDemo = {"\\lambda xyz.xy", "\\lambda xy.x", "y", "xy", "xyzw",
                                        "(\\lambda xy.xy)", "\\lambda xy.x", "y", "xy"};

}  // namespace

TEST(Emit, MacroStrings) {
    EXPECT_EQ(emit(var("x")), "\\var{x}");
    EXPECT_EQ(emit(abs({var("x"), var("y"), var("z")}, raw("A"))), "\\abs{\\var{x},\\var{y},\\var{z}}{A}");
    EXPECT_EQ(emit(app(raw("A"), raw("B"))), "\\app{A}{B}");
}

TEST(Emit, BracketedAbstraction) {
    AstNode fig = dob(abs({var("x")}, var("x")));
    EXPECT_EQ(emit(fig), "\\dobrackets{\\abs{\\var{x}}{\\var{x}}}");
    EmitterConfig parens;
    parens.dobrackets_style = DobracketsStyle::PlainParens;
    EXPECT_EQ(emit(fig, parens), "(\\abs{\\var{x}}{\\var{x}})");
}

TEST(Emit, ConfigurableSeparatorAndPrefix) {
    EmitterConfig c;
    c.flexary_separator = ";";
    c.macro_prefix = "\\s";
    EXPECT_EQ(emit(abs({var("x"), var("y")}, var("x")), c), "\\sabs{\\svar{x};\\svar{y}}{\\svar{x}}");
    c.flexary_separator = "";
    EXPECT_THROW(emit(var("x"), c), Error);
}

TEST(Emit, EmptyFlexarySlotThrows) {
    EXPECT_THROW(emit(abs({}, var("x"))), EmptyFlexary);
    EXPECT_EQ(emit(AstNode::node("zero", {})), "\\zero");
}

TEST(Emit, DobracketsStyleNames) {
    EXPECT_EQ(parse_dobrackets_style("macro"), DobracketsStyle::Macro);
    EXPECT_EQ(parse_dobrackets_style("parens"), DobracketsStyle::PlainParens);
    EXPECT_THROW(parse_dobrackets_style("curly"), Error);
}

TEST(Emit, DemoCandidatePreviews) {
    auto asts = lambda().asts("(\\lambda xy.xy)");
    ASSERT_EQ(asts.size(), 2u);
    std::set<std::string> previews{emit(asts[0]), emit(asts[1])};
    EXPECT_EQ(previews, (std::set<std::string>{"\\dobrackets{\\abs{\\var{x},\\var{y}}{\\app{\\var{x}}{\\var{y}}}}",
                                               "\\dobrackets{\\app{\\abs{\\var{x},\\var{y}}{\\var{x}}}{\\var{y}}}"}));
    auto left = app(app(app(var("x"), var("y")), var("z")), var("w"));
    auto xyzw = lambda().asts("xyzw");
    EXPECT_NE(std::find(xyzw.begin(), xyzw.end(), left), xyzw.end());
    EXPECT_EQ(emit(left), "\\app{\\app{\\app{\\var{x}}{\\var{y}}}{\\var{z}}}{\\var{w}}");
}

TEST(Emit, BracesBalanceOnRandomTrees) {
    std::mt19937 rng(3);
    std::function<AstNode(int)> random_tree = [&](int depth) -> AstNode {
        int pick = depth > 4 ? 0 : static_cast<int>(rng() % 5);
        switch (pick) {
        case 0: return var(std::string(1, static_cast<char>('a' + rng() % 26)));
        case 1: return raw("A");
        case 2: return app(random_tree(depth + 1), random_tree(depth + 1));
        case 3: {
            std::vector<AstNode> vs;
            for (int n = 1 + static_cast<int>(rng() % 3); n > 0; --n) vs.push_back(var("v"));
            return abs(vs, random_tree(depth + 1));
        }
        default: return dob(random_tree(depth + 1));
        }
    };
    for (int i = 0; i < 500; ++i) {
        std::string s = emit(random_tree(0));
        int depth = 0;
        for (char c : s) {
            depth += c == '{' ? 1 : c == '}' ? -1 : 0;
            ASSERT_GE(depth, 0) << s;
        }
        EXPECT_EQ(depth, 0) << s;
    }
}

TEST(Emit, InjectiveAndRoundTripsOnDemoCorpus) {
    std::map<std::string, AstNode> seen;
    for (const auto& formula : kDemo) {
        for (const auto& ast : lambda().asts(formula)) {
            std::string s = emit(ast);
            auto [it, fresh] = seen.emplace(s, ast);
            if (!fresh) EXPECT_EQ(it->second, ast) << s;

            std::string text = plain(ast);
            auto back = lambda().asts(text);
            ASSERT_EQ(back.size(), 1u) << text;
            EXPECT_EQ(back[0], bracketed(ast)) << text;
        }
    }
}
