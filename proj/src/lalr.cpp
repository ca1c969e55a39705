// LALR(1) table construction: LR(0) item sets, then lookahead propagation
// (spontaneous generation + propagation links) over kernel items.

#include <algorithm>
#include <map>
#include <set>

#include "stexify/glr.hpp"

namespace stexify {

namespace {

struct Item {
    std::size_t production;
    std::size_t dot;
    friend auto operator<=>(const Item&, const Item&) = default;
};

using LookaheadSet = std::set<std::size_t>;

class TableBuilder {
public:
    explicit TableBuilder(const Grammar& g) : g_(g) {
        columns_ = g.terminals.size() + 1;
        propagate_marker_ = columns_;
        names_ = g.nonterminals();
        for (const auto& p : g.productions) {
            std::vector<std::size_t> rhs;
            for (const auto& s : p.rhs) rhs.push_back(encode(s));
            prods_.push_back({nt_index(p.lhs), std::move(rhs)});
        }
        augmented_ = prods_.size();
        prods_.push_back({names_.size(), {columns_ + nt_index(g.start)}});
        compute_first();
    }

    std::size_t columns() const { return columns_; }
    const std::vector<std::string>& names() const { return names_; }
    std::size_t lhs(std::size_t prod) const { return prods_[prod].lhs; }

    void build(std::vector<std::vector<std::vector<LrAction>>>& actions,
               std::vector<std::vector<std::size_t>>& go_to) {
        build_lr0();
        compute_lookaheads();

        actions.assign(kernels_.size(), std::vector<std::vector<LrAction>>(columns_));
        go_to.assign(kernels_.size(),
                     std::vector<std::size_t>(names_.size(), CompiledGrammar::kNoState));
        for (std::size_t s = 0; s < kernels_.size(); ++s) {
            for (const auto& [sym, target] : transitions_[s]) {
                if (sym < columns_)
                    actions[s][sym].push_back({LrAction::Kind::Shift, target});
                else
                    go_to[s][sym - columns_] = target;
            }
            std::vector<std::pair<Item, LookaheadSet>> seed;
            for (std::size_t k = 0; k < kernels_[s].size(); ++k)
                seed.emplace_back(kernels_[s][k], lookaheads_[s][k]);
            std::map<std::size_t, std::set<std::size_t>> reduces;  // column -> productions
            for (const auto& [item, las] : closure1(seed)) {
                if (item.dot < prods_[item.production].rhs.size()) continue;
                for (std::size_t a : las) {
                    if (item.production == augmented_) {
                        if (a == CompiledGrammar::kEndOfInput)
                            actions[s][a].push_back({LrAction::Kind::Accept, 0});
                    } else {
                        reduces[a].insert(item.production);
                    }
                }
            }
            for (const auto& [a, ps] : reduces)
                for (std::size_t p : ps) actions[s][a].push_back({LrAction::Kind::Reduce, p});
        }
    }

private:
    struct Prod {
        std::size_t lhs;
        std::vector<std::size_t> rhs;
    };

    std::size_t nt_index(const std::string& name) const {
        return static_cast<std::size_t>(std::find(names_.begin(), names_.end(), name) -
                                        names_.begin());
    }

    std::size_t encode(const Symbol& s) const {
        if (!s.is_terminal()) return columns_ + nt_index(s.name);
        for (std::size_t i = 0; i < g_.terminals.size(); ++i)
            if (g_.terminals[i].id == s.name) return i + 1;
        return 0;
    }

    bool is_nt(std::size_t sym) const { return sym >= columns_; }

    void compute_first() {
        std::size_t n = names_.size() + 1;
        first_.assign(n, {});
        nullable_.assign(n, false);
        for (bool changed = true; changed;) {
            changed = false;
            for (const auto& p : prods_) {
                bool all_nullable = true;
                for (std::size_t sym : p.rhs) {
                    if (!is_nt(sym)) {
                        changed = first_[p.lhs].insert(sym).second || changed;
                        all_nullable = false;
                        break;
                    }
                    for (std::size_t a : first_[sym - columns_])
                        changed = first_[p.lhs].insert(a).second || changed;
                    if (!nullable_[sym - columns_]) {
                        all_nullable = false;
                        break;
                    }
                }
                if (all_nullable && !nullable_[p.lhs]) {
                    nullable_[p.lhs] = true;
                    changed = true;
                }
            }
        }
    }

    // FIRST of rhs[from..]; second = whether that suffix is nullable.
    std::pair<LookaheadSet, bool> first_of(const std::vector<std::size_t>& rhs,
                                           std::size_t from) const {
        LookaheadSet out;
        for (std::size_t i = from; i < rhs.size(); ++i) {
            if (!is_nt(rhs[i])) {
                out.insert(rhs[i]);
                return {out, false};
            }
            const auto& f = first_[rhs[i] - columns_];
            out.insert(f.begin(), f.end());
            if (!nullable_[rhs[i] - columns_]) return {out, false};
        }
        return {out, true};
    }

    std::vector<Item> closure0(const std::vector<Item>& kernel) const {
        std::vector<Item> items = kernel;
        std::set<Item> seen(kernel.begin(), kernel.end());
        for (std::size_t i = 0; i < items.size(); ++i) {
            const auto& rhs = prods_[items[i].production].rhs;
            if (items[i].dot >= rhs.size() || !is_nt(rhs[items[i].dot])) continue;
            std::size_t nt = rhs[items[i].dot] - columns_;
            for (std::size_t p = 0; p < prods_.size(); ++p)
                if (prods_[p].lhs == nt && seen.insert({p, 0}).second) items.push_back({p, 0});
        }
        return items;
    }

    std::map<Item, LookaheadSet> closure1(const std::vector<std::pair<Item, LookaheadSet>>& seed) const {
        std::map<Item, LookaheadSet> out;
        std::vector<Item> work;
        for (const auto& [item, las] : seed) {
            out[item].insert(las.begin(), las.end());
            work.push_back(item);
        }
        while (!work.empty()) {
            Item item = work.back();
            work.pop_back();
            const auto& rhs = prods_[item.production].rhs;
            if (item.dot >= rhs.size() || !is_nt(rhs[item.dot])) continue;
            auto [las, nullable] = first_of(rhs, item.dot + 1);
            if (nullable) las.insert(out[item].begin(), out[item].end());
            std::size_t nt = rhs[item.dot] - columns_;
            for (std::size_t p = 0; p < prods_.size(); ++p) {
                if (prods_[p].lhs != nt) continue;
                bool fresh = !out.count(Item{p, 0});
                auto& target = out[Item{p, 0}];
                std::size_t before = target.size();
                target.insert(las.begin(), las.end());
                if (fresh || target.size() != before) work.push_back({p, 0});
            }
        }
        return out;
    }

    void build_lr0() {
        std::map<std::vector<Item>, std::size_t> index;
        kernels_.push_back({{augmented_, 0}});
        index[kernels_[0]] = 0;
        transitions_.emplace_back();
        for (std::size_t s = 0; s < kernels_.size(); ++s) {
            std::map<std::size_t, std::vector<Item>> moves;
            for (const Item& it : closure0(kernels_[s])) {
                const auto& rhs = prods_[it.production].rhs;
                if (it.dot < rhs.size()) moves[rhs[it.dot]].push_back({it.production, it.dot + 1});
            }
            for (auto& [sym, kernel] : moves) {
                std::sort(kernel.begin(), kernel.end());
                kernel.erase(std::unique(kernel.begin(), kernel.end()), kernel.end());
                auto [pos, inserted] = index.emplace(kernel, kernels_.size());
                if (inserted) {
                    kernels_.push_back(kernel);
                    transitions_.emplace_back();
                }
                transitions_[s][sym] = pos->second;
            }
        }
    }

    std::size_t kernel_slot(std::size_t state, const Item& item) const {
        const auto& k = kernels_[state];
        return static_cast<std::size_t>(std::lower_bound(k.begin(), k.end(), item) - k.begin());
    }

    void compute_lookaheads() {
        lookaheads_.assign(kernels_.size(), {});
        for (std::size_t s = 0; s < kernels_.size(); ++s) lookaheads_[s].resize(kernels_[s].size());
        lookaheads_[0][0].insert(CompiledGrammar::kEndOfInput);

        std::vector<std::pair<std::pair<std::size_t, std::size_t>, std::pair<std::size_t, std::size_t>>>
            links;
        for (std::size_t s = 0; s < kernels_.size(); ++s) {
            for (std::size_t k = 0; k < kernels_[s].size(); ++k) {
                auto closed = closure1({{kernels_[s][k], {propagate_marker_}}});
                for (const auto& [item, las] : closed) {
                    const auto& rhs = prods_[item.production].rhs;
                    if (item.dot >= rhs.size()) continue;
                    std::size_t target = transitions_[s].at(rhs[item.dot]);
                    std::size_t slot = kernel_slot(target, {item.production, item.dot + 1});
                    for (std::size_t a : las) {
                        if (a == propagate_marker_)
                            links.push_back({{s, k}, {target, slot}});
                        else
                            lookaheads_[target][slot].insert(a);
                    }
                }
            }
        }
        for (bool changed = true; changed;) {
            changed = false;
            for (const auto& [from, to] : links) {
                const auto& src = lookaheads_[from.first][from.second];
                auto& dst = lookaheads_[to.first][to.second];
                std::size_t before = dst.size();
                dst.insert(src.begin(), src.end());
                changed = changed || dst.size() != before;
            }
        }
    }

    const Grammar& g_;
    std::size_t columns_ = 0;
    std::size_t propagate_marker_ = 0;
    std::vector<std::string> names_;
    std::vector<Prod> prods_;
    std::size_t augmented_ = 0;
    std::vector<LookaheadSet> first_;
    std::vector<bool> nullable_;
    std::vector<std::vector<Item>> kernels_;
    std::vector<std::map<std::size_t, std::size_t>> transitions_;
    std::vector<std::vector<LookaheadSet>> lookaheads_;
};

}  // namespace

CompiledGrammar compile(const Grammar& grammar) {
    auto report = validate(grammar);
    if (!report.ok()) throw InvalidGrammar(std::move(report));

    CompiledGrammar cg;
    cg.grammar_ = std::make_shared<const Grammar>(grammar);
    TableBuilder builder(*cg.grammar_);
    builder.build(cg.actions_, cg.goto_);
    cg.nonterminals_ = builder.names();
    for (std::size_t p = 0; p < grammar.productions.size(); ++p) cg.lhs_.push_back(builder.lhs(p));
    return cg;
}

std::optional<std::size_t> CompiledGrammar::nonterminal_index(std::string_view name) const {
    for (std::size_t i = 0; i < nonterminals_.size(); ++i)
        if (nonterminals_[i] == name) return i;
    return std::nullopt;
}

std::optional<std::size_t> CompiledGrammar::terminal_column(std::string_view id) const {
    for (std::size_t i = 0; i < grammar_->terminals.size(); ++i)
        if (grammar_->terminals[i].id == id) return i + 1;
    return std::nullopt;
}

std::vector<std::pair<std::size_t, std::size_t>> CompiledGrammar::conflicts() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t s = 0; s < actions_.size(); ++s)
        for (std::size_t c = 0; c < actions_[s].size(); ++c)
            if (actions_[s][c].size() > 1) out.emplace_back(s, c);
    return out;
}

}  // namespace stexify
