#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stexify/grammar.hpp"

namespace stexify::testing {

inline std::string data_path(const std::string& name) { return std::string(STEXIFY_DATA_DIR) + "/" + name; }
inline std::string golden_path(const std::string& name) { return std::string(STEXIFY_GOLDEN_DIR) + "/" + name; }

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline Grammar lambda_grammar() { return load_grammar_file(data_path("lambda.grammar")); }

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("stexify-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

/// Hand tokenizer for the lambda fixture: terminal ids in the order the
/// grammar would see them. Independent of the scanner.
inline std::vector<std::string> lambda_terminals(const Grammar& g, std::string_view text) {
    const std::string open = g.productions_of("parexp").front()->rhs[0].name;
    const std::string close = g.productions_of("parexp").front()->rhs[2].name;
    std::vector<std::string> out;
    for (std::size_t i = 0; i < text.size();) {
        char c = text[i];
        if (c == ' ') {
            ++i;
        } else if (text.substr(i, 7) == "\\lambda") {
            out.push_back("lam");
            i += 7;
        } else if (text.substr(i, 2) == "\xce\xbb") {
            out.push_back("lam");
            i += 2;
        } else if (c == '.') {
            out.push_back("dot");
            ++i;
        } else if (c == '(' || c == ')') {
            out.push_back(c == '(' ? open : close);
            ++i;
        } else if (c >= 'a' && c <= 'z') {
            out.push_back("var");
            ++i;
        } else {
            throw std::invalid_argument("not a lambda formula: " + std::string(text));
        }
    }
    return out;
}

}  // namespace stexify::testing
