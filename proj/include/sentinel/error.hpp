#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sentinel {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input text; carries the 1-based line number when known (0 otherwise).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Geometry or statistics that cannot identify a unique answer.
class DegenerateError : public Error {
public:
    using Error::Error;
};

}  // namespace sentinel
