#pragma once

#include <stdexcept>
#include <string>

namespace aggsteady {

// Rejected input: violated precondition or malformed data.
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

// A numerical procedure failed to reach its target (no convergence, bracketing failure).
class NumericalFailure : public std::runtime_error {
public:
    explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidInput(msg);
}

}  // namespace aggsteady
