#include "stexify/glr.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <tuple>

namespace stexify {

std::string NoParse::describe() const {
    std::string what;
    switch (kind) {
    case Kind::Lexical: what = "no token matches"; break;
    case Kind::Syntax: what = "unexpected token"; break;
    case Kind::UnexpectedEnd: what = "unexpected end of input"; break;
    }
    std::string exp;
    for (const auto& e : expected) exp += (exp.empty() ? "" : ", ") + e;
    return what + " at " + std::to_string(position) + " (expected: " + exp + ")";
}

TooManyParses::TooManyParses(std::uint64_t count, bool exact, std::size_t cap)
    : Error("too_many_parses", (exact ? "" : "at least ") + std::to_string(count) +
                                   " parses exceed the enumeration cap of " +
                                   std::to_string(cap)),
      count_(count),
      exact_(exact) {}

namespace {

struct GssNode;

struct GssEdge {
    GssNode* to;
    std::size_t label;  // forest node
};

struct GssNode {
    std::size_t state;
    std::size_t pos;
    std::vector<GssEdge> edges;

    bool has_edge_to(const GssNode* n) const {
        return std::any_of(edges.begin(), edges.end(), [&](const GssEdge& e) { return e.to == n; });
    }
};

using Layer = std::map<std::size_t, GssNode*>;  // state -> node

}  // namespace

/// Tomita-style GLR over a token lattice. Each layer of the graph-structured
/// stack sits at a scanner position; reductions in a layer are repeated until
/// no new stack node or edge appears, which also covers nullable right
/// contexts. The forest shares symbol nodes by (symbol, span) and deduplicates
/// packed nodes by (production, children).
class GlrDriver {
public:
    GlrDriver(const CompiledGrammar& cg, std::string_view input, const RecognizerRegistry& registry)
        : cg_(cg), scanner_(cg.grammar(), registry), input_(input) {
        forest_.input_ = std::string(input);
    }

    ParseForest run() {
        const std::size_t begin = scanner_.skip_whitespace(input_, 0);
        new_node(pending_[begin], 0, begin);

        struct LastLayer {
            std::size_t pos = 0;
            std::vector<std::size_t> expected;
            bool tokens_found = false;
        } last;

        while (!pending_.empty()) {
            auto it = pending_.begin();
            const std::size_t pos = it->first;
            Layer layer = std::move(it->second);
            pending_.erase(it);

            const bool at_end = pos == input_.size();
            std::vector<std::pair<std::size_t, Token>> tokens;
            std::set<std::size_t> scanned;
            std::vector<std::size_t> lookahead;
            if (at_end) lookahead.push_back(CompiledGrammar::kEndOfInput);

            while (true) {
                reduce_closure(layer, pos, lookahead);
                if (at_end) break;
                std::vector<std::size_t> fresh;
                for (std::size_t col : expected_columns(layer))
                    if (col != CompiledGrammar::kEndOfInput && scanned.insert(col).second)
                        fresh.push_back(col - 1);
                if (fresh.empty()) break;
                std::size_t before = tokens.size();
                for (auto& t : scanner_.scan(input_, pos, fresh)) tokens.push_back(std::move(t));
                if (tokens.size() == before) break;
                for (std::size_t i = before; i < tokens.size(); ++i)
                    lookahead.push_back(tokens[i].first + 1);
            }

            last.pos = pos;
            last.expected = expected_columns(layer);
            last.tokens_found = !tokens.empty();

            if (at_end) {
                accept(layer, begin);
            } else {
                shift(layer, pos, tokens);
            }
        }

        if (!forest_.root_) {
            NoParse np;
            np.position = last.pos;
            if (last.pos == input_.size())
                np.kind = NoParse::Kind::UnexpectedEnd;
            else
                np.kind = last.tokens_found ? NoParse::Kind::Syntax : NoParse::Kind::Lexical;
            for (std::size_t col : last.expected)
                np.expected.push_back(col == CompiledGrammar::kEndOfInput
                                          ? std::string("$end")
                                          : cg_.grammar().terminals[col - 1].id);
            forest_.failure_ = std::move(np);
        }
        finalize();
        return std::move(forest_);
    }

private:
    GssNode* new_node(Layer& layer, std::size_t state, std::size_t pos) {
        arena_.push_back(GssNode{state, pos, {}});
        GssNode* n = &arena_.back();
        layer[state] = n;
        return n;
    }

    std::vector<std::size_t> expected_columns(const Layer& layer) const {
        std::set<std::size_t> cols;
        for (const auto& [state, node] : layer)
            for (std::size_t c = 0; c < cg_.terminal_columns(); ++c)
                if (!cg_.actions(state, c).empty()) cols.insert(c);
        return {cols.begin(), cols.end()};
    }

    std::size_t forest_node(bool terminal, std::size_t symbol, std::size_t begin, std::size_t end,
                            const Token* token) {
        auto key = std::make_tuple(terminal, symbol, begin, end);
        auto [it, inserted] = index_.emplace(key, forest_.nodes_.size());
        if (inserted) {
            ForestNode n;
            n.terminal = terminal;
            n.symbol = terminal ? cg_.grammar().terminals[symbol - 1].id : cg_.nonterminal_name(symbol);
            n.span = {begin, end};
            if (token) n.token = *token;
            forest_.nodes_.push_back(std::move(n));
            packed_seen_.emplace_back();
        }
        return it->second;
    }

    void add_packed(std::size_t node, std::size_t production, std::vector<std::size_t> children) {
        std::vector<std::size_t> key = children;
        key.push_back(production);
        if (packed_seen_[node].insert(std::move(key)).second)
            forest_.nodes_[node].packed.push_back({production, std::move(children)});
    }

    // All GSS paths of `length` edges starting at `from`; labels in left-to-right order.
    void paths(GssNode* from, std::size_t length,
               std::vector<std::pair<GssNode*, std::vector<std::size_t>>>& out) {
        std::vector<std::size_t> labels;
        std::function<void(GssNode*, std::size_t)> walk = [&](GssNode* n, std::size_t left) {
            if (left == 0) {
                out.emplace_back(n, std::vector<std::size_t>(labels.rbegin(), labels.rend()));
                return;
            }
            for (const auto& e : n->edges) {
                labels.push_back(e.label);
                walk(e.to, left - 1);
                labels.pop_back();
            }
        };
        walk(from, length);
    }

    void reduce_closure(Layer& layer, std::size_t pos, const std::vector<std::size_t>& lookahead) {
        for (bool changed = true; changed;) {
            changed = false;
            std::vector<GssNode*> nodes;
            for (const auto& [state, node] : layer) nodes.push_back(node);
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                GssNode* v = nodes[i];
                std::set<std::size_t> productions;
                for (std::size_t col : lookahead)
                    for (const auto& a : cg_.actions(v->state, col))
                        if (a.kind == LrAction::Kind::Reduce) productions.insert(a.target);
                for (std::size_t prod : productions) {
                    const std::size_t lhs = cg_.production_lhs(prod);
                    std::vector<std::pair<GssNode*, std::vector<std::size_t>>> found;
                    paths(v, cg_.production_length(prod), found);
                    for (auto& [u, children] : found) {
                        std::size_t sym = forest_node(false, lhs, u->pos, pos, nullptr);
                        add_packed(sym, prod, std::move(children));
                        std::size_t target = cg_.go_to(u->state, lhs);
                        if (target == CompiledGrammar::kNoState) continue;
                        auto w_it = layer.find(target);
                        GssNode* w;
                        if (w_it == layer.end()) {
                            w = new_node(layer, target, pos);
                            nodes.push_back(w);
                            changed = true;
                        } else {
                            w = w_it->second;
                        }
                        if (!w->has_edge_to(u)) {
                            w->edges.push_back({u, sym});
                            changed = true;
                        }
                    }
                }
            }
        }
    }

    void shift(const Layer& layer, std::size_t pos,
               const std::vector<std::pair<std::size_t, Token>>& tokens) {
        for (const auto& [state, v] : layer) {
            for (const auto& [index, tok] : tokens) {
                const std::size_t col = index + 1;
                for (const auto& a : cg_.actions(state, col)) {
                    if (a.kind != LrAction::Kind::Shift) continue;
                    const std::size_t next = scanner_.skip_whitespace(input_, tok.span.end);
                    std::size_t leaf = forest_node(true, col, pos, next, &tok);
                    Layer& target_layer = pending_[next];
                    auto w_it = target_layer.find(a.target);
                    GssNode* w = w_it == target_layer.end() ? new_node(target_layer, a.target, next)
                                                            : w_it->second;
                    if (!w->has_edge_to(v)) w->edges.push_back({v, leaf});
                }
            }
        }
    }

    void accept(const Layer& layer, std::size_t begin) {
        for (const auto& [state, node] : layer) {
            const auto& acts = cg_.actions(state, CompiledGrammar::kEndOfInput);
            bool accepts = std::any_of(acts.begin(), acts.end(), [](const LrAction& a) {
                return a.kind == LrAction::Kind::Accept;
            });
            if (!accepts) continue;
            for (const auto& e : node->edges)
                if (e.to->state == 0 && e.to->pos == begin) forest_.root_ = e.label;
        }
    }

    void finalize() {
        auto& nodes = forest_.nodes_;
        for (auto& n : nodes) {
            std::sort(n.packed.begin(), n.packed.end(),
                      [&](const PackedNode& a, const PackedNode& b) {
                          if (a.production != b.production) return a.production < b.production;
                          auto spans = [&](const PackedNode& p) {
                              std::vector<std::pair<std::size_t, std::size_t>> s;
                              for (std::size_t c : p.children)
                                  s.emplace_back(nodes[c].span.begin, nodes[c].span.end);
                              return s;
                          };
                          return spans(a) < spans(b);
                      });
        }
    }

    const CompiledGrammar& cg_;
    Scanner scanner_;
    std::string_view input_;
    ParseForest forest_;
    std::deque<GssNode> arena_;
    std::map<std::size_t, Layer> pending_;
    std::map<std::tuple<bool, std::size_t, std::size_t, std::size_t>, std::size_t> index_;
    std::vector<std::set<std::vector<std::size_t>>> packed_seen_;
};

ParseForest parse(const CompiledGrammar& compiled, std::string_view input,
                  const RecognizerRegistry& registry) {
    return GlrDriver(compiled, input, registry).run();
}

std::vector<std::string> frontier(const ParseTree& tree) {
    std::vector<std::string> out;
    std::function<void(const ParseTree&)> walk = [&](const ParseTree& t) {
        if (t.is_leaf()) {
            out.push_back(t.token.lexeme);
            return;
        }
        for (const auto& c : t.children) walk(c);
    };
    walk(tree);
    return out;
}

namespace {

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
    return a > kCountSaturated - b ? kCountSaturated : a + b;
}

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
    if (a == 0 || b == 0) return 0;
    return a > kCountSaturated / b ? kCountSaturated : a * b;
}

}  // namespace

std::uint64_t count_trees(const ParseForest& forest) {
    if (!forest.root()) return 0;
    std::vector<std::optional<std::uint64_t>> memo(forest.nodes().size());
    std::function<std::uint64_t(std::size_t)> count = [&](std::size_t i) -> std::uint64_t {
        if (memo[i]) return *memo[i];
        const ForestNode& n = forest.node(i);
        std::uint64_t total = n.terminal ? 1 : 0;
        for (const auto& p : n.packed) {
            std::uint64_t product = 1;
            for (std::size_t c : p.children) product = sat_mul(product, count(c));
            total = sat_add(total, product);
        }
        memo[i] = total;
        return total;
    };
    return count(*forest.root());
}

std::vector<ParseTree> enumerate_trees(const ParseForest& forest, std::size_t cap) {
    if (cap == 0) throw Error("bad_argument", "enumeration cap must be at least 1");
    if (!forest.root()) return {};
    const std::uint64_t total = count_trees(forest);
    if (total > cap) throw TooManyParses(total, total != kCountSaturated, cap);

    std::map<std::size_t, std::vector<ParseTree>> memo;
    std::function<const std::vector<ParseTree>&(std::size_t)> trees =
        [&](std::size_t i) -> const std::vector<ParseTree>& {
        if (auto it = memo.find(i); it != memo.end()) return it->second;
        const ForestNode& n = forest.node(i);
        std::vector<ParseTree> out;
        if (n.terminal) {
            ParseTree leaf;
            leaf.token = *n.token;
            out.push_back(std::move(leaf));
        }
        for (const auto& p : n.packed) {
            std::vector<const std::vector<ParseTree>*> options;
            bool empty = false;
            for (std::size_t c : p.children) {
                options.push_back(&trees(c));
                empty = empty || options.back()->empty();
            }
            if (empty) continue;
            // Odometer over the children's alternatives, leftmost child slowest.
            std::vector<std::size_t> pick(options.size(), 0);
            while (true) {
                ParseTree t;
                t.production = p.production;
                for (std::size_t k = 0; k < options.size(); ++k)
                    t.children.push_back((*options[k])[pick[k]]);
                out.push_back(std::move(t));
                bool done = true;
                for (std::size_t k = options.size(); k-- > 0;) {
                    if (++pick[k] < options[k]->size()) {
                        done = false;
                        break;
                    }
                    pick[k] = 0;
                }
                if (done) break;
            }
        }
        return memo.emplace(i, std::move(out)).first->second;
    };
    return trees(*forest.root());
}

}  // namespace stexify
