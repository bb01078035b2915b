#pragma once

#include <stdexcept>
#include <string>

namespace catsim {

/// Bad input from the user: unreadable files, malformed records,
/// out-of-range parameters. Maps to CLI exit code 2.
class UserError : public std::runtime_error {
public:
  explicit UserError(const std::string& what) : std::runtime_error(what) {}
};

/// Violated internal contract (protocol bug, clock divergence). Exit code 1.
class InternalError : public std::logic_error {
public:
  explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

} // namespace catsim
