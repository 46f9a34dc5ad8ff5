#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rcchain {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised for a malformed netlist line. `line()` is 1-based and refers to the
/// first physical line of the offending logical line.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A caller violated a documented precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

}  // namespace rcchain
