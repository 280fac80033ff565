#pragma once

#include <stdexcept>
#include <string>

namespace fbmcond {

/// Argument outside the mathematical domain of an operation.
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Result not representable in double precision.
class overflow_error : public std::overflow_error {
public:
    using std::overflow_error::overflow_error;
};

/// A series or iteration failed to reach its hard accuracy floor.
class convergence_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

[[noreturn]] inline void throw_domain(const char* where, const std::string& what)
{
    throw domain_error(std::string(where) + ": " + what);
}

}  // namespace detail
}  // namespace fbmcond
