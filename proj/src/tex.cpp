#include "stexify/tex.hpp"

#include <atomic>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace stexify {

std::string to_string(FormulaKind kind) {
    switch (kind) {
    case FormulaKind::Inline: return "inline";
    case FormulaKind::Display: return "display";
    case FormulaKind::Environment: return "environment";
    }
    return "";
}

namespace {

bool is_letter(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

class Extractor {
public:
    Extractor(std::string_view doc, const ExtractConfig& c) : d_(doc), c_(c) {}

    std::vector<FormulaSpan> run() {
        std::size_t i = 0;
        while (i < d_.size()) {
            char ch = d_[i];
            if (ch == '%') {
                i = line_end(i);
            } else if (ch == '$') {
                if (i + 1 < d_.size() && d_[i + 1] == '$') {
                    i = delimited(i, 2, "$$", FormulaKind::Display);
                } else {
                    i = delimited(i, 1, "$", FormulaKind::Inline);
                }
            } else if (ch == '\\') {
                i = control(i);
            } else {
                ++i;
            }
        }
        return std::move(out_);
    }

private:
    std::size_t line_end(std::size_t i) const {
        auto nl = d_.find('\n', i);
        return nl == std::string_view::npos ? d_.size() : nl;
    }

    std::size_t word_end(std::size_t i) const {
        while (i < d_.size() && is_letter(d_[i])) ++i;
        return i;
    }

    // Reads `{name}` at i; returns the name and sets `after`.
    std::string group_at(std::size_t i, std::size_t& after) const {
        if (i >= d_.size() || d_[i] != '{') return {};
        auto close = d_.find('}', i);
        if (close == std::string_view::npos) return {};
        after = close + 1;
        return std::string(d_.substr(i + 1, close - i - 1));
    }

    std::size_t control(std::size_t i) {
        if (i + 1 >= d_.size()) return d_.size();
        char next = d_[i + 1];
        if (next == '(') return delimited(i, 2, "\\)", FormulaKind::Inline);
        if (next == '[') return delimited(i, 2, "\\]", FormulaKind::Display);
        if (!is_letter(next)) return i + 2;
        std::size_t end = word_end(i + 1);
        std::string_view word = d_.substr(i + 1, end - i - 1);
        if (word == "verb") return verb(end);
        if (word == "begin") {
            std::size_t after = end;
            std::string env = group_at(end, after);
            if (c_.verbatim_environments.count(env)) {
                std::string closing = "\\end{" + env + "}";
                auto pos = d_.find(closing, after);
                return pos == std::string_view::npos ? d_.size() : pos + closing.size();
            }
            if (c_.math_environments.count(env)) return environment(i, after, env);
        }
        return end;
    }

    std::size_t verb(std::size_t i) {
        if (i < d_.size() && d_[i] == '*') ++i;
        if (i >= d_.size()) return i;
        char delim = d_[i];
        auto close = d_.find(delim, i + 1);
        return close == std::string_view::npos ? d_.size() : close + 1;
    }

    // Position of `closing` in math starting at i, honouring escapes and comments.
    std::size_t find_close(std::size_t i, std::string_view closing) const {
        while (i < d_.size()) {
            if (d_.substr(i, closing.size()) == closing) return i;
            if (d_[i] == '%') {
                i = line_end(i);
            } else if (d_[i] == '\\') {
                i += 2;
            } else {
                ++i;
            }
        }
        return std::string_view::npos;
    }

    std::size_t delimited(std::size_t open, std::size_t open_len, std::string_view closing, FormulaKind kind) {
        std::size_t inner = open + open_len;
        std::size_t close = find_close(inner, closing);
        if (close == std::string_view::npos) throw UnterminatedMath(open);
        add(kind, "", {open, close + closing.size()}, {inner, close});
        return close + closing.size();
    }

    std::size_t environment(std::size_t open, std::size_t inner, const std::string& env) {
        std::string closing = "\\end{" + env + "}";
        std::size_t i = inner;
        while (true) {
            std::size_t close = find_close(i, "\\end{");
            if (close == std::string_view::npos) throw UnterminatedMath(open);
            if (d_.substr(close, closing.size()) == closing) {
                add(FormulaKind::Environment, env, {open, close + closing.size()}, {inner, close});
                return close + closing.size();
            }
            i = close + 1;
        }
    }

    void add(FormulaKind kind, std::string env, Span outer, Span inner) {
        FormulaSpan f;
        f.id = out_.size();
        f.kind = kind;
        f.environment = std::move(env);
        f.outer = outer;
        f.inner = inner;
        f.raw = std::string(d_.substr(inner.begin, inner.end - inner.begin));
        out_.push_back(std::move(f));
    }

    std::string_view d_;
    const ExtractConfig& c_;
    std::vector<FormulaSpan> out_;
};

}  // namespace

std::vector<FormulaSpan> extract_formulas(std::string_view document, const ExtractConfig& config) {
    return Extractor(document, config).run();
}

std::string rewrite(std::string_view document, const std::vector<FormulaSpan>& spans, const RewritePlan& plan) {
    for (const auto& [id, text] : plan.replacements) {
        bool known = false;
        for (const auto& f : spans) known = known || f.id == id;
        if (!known) throw Error("unknown_formula", "rewrite plan names unknown formula " + std::to_string(id));
    }
    std::string out;
    out.reserve(document.size());
    std::size_t pos = 0;
    for (const auto& f : spans) {
        auto it = plan.replacements.find(f.id);
        if (it == plan.replacements.end()) continue;
        out.append(document.substr(pos, f.inner.begin - pos));
        out += it->second;
        pos = f.inner.end;
    }
    out.append(document.substr(pos));
    return out;
}

std::string usemodule_notice(const std::vector<std::string>& modules) {
    if (modules.empty()) return {};
    std::string out = "% TODO: import the modules used by the rewritten formulas:\n";
    for (const auto& m : modules) out += "% \\usemodule{" + m + "}\n";
    return out;
}

std::string default_output_path(const std::string& input_path) {
    std::filesystem::path p(input_path);
    return (p.parent_path() / (p.stem().string() + ".stexified.tex")).string();
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io_error", "cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file_atomically(const std::string& path, std::string_view content) {
    std::filesystem::path target(path);
    std::filesystem::path tmp = target;
    static std::atomic<unsigned> serial{0};
    tmp += ".tmp" + std::to_string(::getpid()) + "." + std::to_string(serial++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("io_error", "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw Error("io_error", "cannot write " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error("io_error", "cannot write " + path + ": " + ec.message());
    }
}

}  // namespace stexify
