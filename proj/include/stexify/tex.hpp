#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "stexify/error.hpp"
#include "stexify/lexing.hpp"

namespace stexify {

enum class FormulaKind { Inline, Display, Environment };

struct FormulaSpan {
    std::size_t id = 0;
    FormulaKind kind = FormulaKind::Inline;
    std::string environment;  // Environment kind only
    Span outer;               // including delimiters
    Span inner;               // math content
    std::string raw;          // document bytes of `inner`

    friend bool operator==(const FormulaSpan&, const FormulaSpan&) = default;
};

std::string to_string(FormulaKind kind);

struct ExtractConfig {
    std::set<std::string> math_environments{"equation", "equation*", "align", "align*"};
    std::set<std::string> verbatim_environments{"verbatim", "verbatim*", "minted", "lstlisting"};
};

class UnterminatedMath : public PositionedError {
public:
    explicit UnterminatedMath(std::size_t position)
        : PositionedError("unterminated_math",
                          "math opened at byte " + std::to_string(position) + " is never closed", position) {}
};

/// Math formulas in document order. Handles `$..$`, `$$..$$`, `\(..\)`,
/// `\[..\]` and the configured environments; skips comments, `\verb` and
/// verbatim-like environments.
std::vector<FormulaSpan> extract_formulas(std::string_view document, const ExtractConfig& config = {});

struct RewritePlan {
    std::string source_path;
    std::map<std::size_t, std::string> replacements;  // formula id -> new inner content
};

/// Copy of `document` with the inner span of every planned formula replaced.
std::string rewrite(std::string_view document, const std::vector<FormulaSpan>& spans, const RewritePlan& plan);

/// `% TODO` block listing `\usemodule` lines; empty when `modules` is empty.
std::string usemodule_notice(const std::vector<std::string>& modules);

/// `dir/thesis.tex` -> `dir/thesis.stexified.tex`.
std::string default_output_path(const std::string& input_path);

std::string read_text_file(const std::string& path);

/// Writes through a temporary sibling file and renames it into place.
void write_file_atomically(const std::string& path, std::string_view content);

}  // namespace stexify
