#pragma once

// Brute-force derivation counter used as an independent oracle for the GLR
// engine. Works on terminal-id sequences directly (no scanner involved) and
// sums over every production and every split point, memoized per
// (symbol, begin, end). Requires an epsilon-free grammar.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "stexify/grammar.hpp"

namespace stexify::testing {

class CykOracle {
public:
    explicit CykOracle(const Grammar& g) : g_(g) {
        for (const auto& p : g.productions)
            if (p.rhs.empty()) throw std::invalid_argument("oracle needs an epsilon-free grammar");
    }

    std::uint64_t count(const std::vector<std::string>& terminals) {
        tokens_ = terminals;
        memo_.clear();
        return symbol(Symbol::nonterminal(g_.start), 0, tokens_.size());
    }

private:
    std::uint64_t symbol(const Symbol& s, std::size_t i, std::size_t j) {
        if (s.is_terminal()) return (j == i + 1 && tokens_[i] == s.name) ? 1 : 0;
        if (i >= j) return 0;
        auto key = std::make_tuple(s.name, i, j);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
        std::uint64_t total = 0;
        for (const auto& p : g_.productions)
            if (p.lhs == s.name) total += sequence(p.rhs, 0, i, j);
        memo_[key] = total;
        return total;
    }

    // Ways for rhs[k..] to cover tokens [i, j); every symbol takes at least one token.
    std::uint64_t sequence(const std::vector<Symbol>& rhs, std::size_t k, std::size_t i, std::size_t j) {
        if (k == rhs.size()) return i == j ? 1 : 0;
        std::size_t remaining = rhs.size() - k - 1;
        std::uint64_t total = 0;
        for (std::size_t m = i + 1; m + remaining <= j; ++m) {
            std::uint64_t head = symbol(rhs[k], i, m);
            if (head) total += head * sequence(rhs, k + 1, m, j);
        }
        return total;
    }

    const Grammar& g_;
    std::vector<std::string> tokens_;
    std::map<std::tuple<std::string, std::size_t, std::size_t>, std::uint64_t> memo_;
};

/// Catalan(n) by the binomial recurrence, independent of any parser.
inline std::uint64_t catalan(unsigned n) {
    std::uint64_t c = 1;
    for (unsigned k = 0; k < n; ++k) c = c * 2 * (2 * k + 1) / (k + 2);
    return c;
}

}  // namespace stexify::testing
