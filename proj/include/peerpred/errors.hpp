#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace peerpred {

/// Input failed a documented constraint (malformed model, bad report, ...).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An exhaustive search was asked to exceed its enumeration cap.
class CapExceededError : public std::runtime_error {
public:
    CapExceededError(const std::string& what, std::size_t cap)
        : std::runtime_error(what + " (cap " + std::to_string(cap) + ")"), cap_(cap) {}

    std::size_t cap() const noexcept { return cap_; }

private:
    std::size_t cap_;
};

/// The linear-programming solver failed to converge. Distinct from infeasibility.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace peerpred
