#pragma once

#include <stdexcept>
#include <string>

namespace sketchlab {

// Caller broke a documented precondition.
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A numerical routine could not deliver its guarantee.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file. `where` is "line N" or a JSON field path.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string where, const std::string& what)
        : std::runtime_error(where + ": " + what), where_(std::move(where)) {}

    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

inline void require(bool ok, const std::string& message) {
    if (!ok) throw ContractViolation(message);
}

}  // namespace sketchlab
