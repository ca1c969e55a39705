#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace stexify {

/// Base class of every error the library throws. `code()` is a stable,
/// machine-readable tag; the HTTP service forwards it verbatim.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// Error located at a byte offset in some input text.
class PositionedError : public Error {
public:
    PositionedError(std::string code, const std::string& message, std::size_t position)
        : Error(std::move(code), message), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

}  // namespace stexify
