#pragma once

#include <string>

#include "stexify/ast.hpp"
#include "stexify/error.hpp"

namespace stexify {

enum class DobracketsStyle { Macro, PlainParens };

struct EmitterConfig {
    std::string flexary_separator = ",";
    DobracketsStyle dobrackets_style = DobracketsStyle::Macro;
    std::string macro_prefix = "\\";
};

class EmptyFlexary : public Error {
public:
    explicit EmptyFlexary(const std::string& macro)
        : Error("empty_flexary", "flexary argument of " + macro + " has no members") {}
};

/// `node(c1, c2)` -> `\node{c1}{c2}`; a flexary slot becomes one brace
/// group of members joined by the separator; leaves become `\name{lexeme}`
/// unless verbatim. No whitespace is inserted.
std::string emit(const AstNode& ast, const EmitterConfig& config = {});

/// "macro" or "parens"; anything else throws.
DobracketsStyle parse_dobrackets_style(const std::string& text);

}  // namespace stexify
