#pragma once

#include <stdexcept>
#include <string>

namespace cellsel {

// Invalid argument to a numeric routine (negative rate, non-finite value, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// No assignment satisfies the per-cell capacity constraints.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, std::size_t shortfall)
      : std::runtime_error(what), shortfall_(shortfall) {}

  std::size_t shortfall() const noexcept { return shortfall_; }

 private:
  std::size_t shortfall_;
};

// Exhaustive search requested on an instance above the enumeration guard.
class SizeGuardError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Scenario configuration problem: parse failure, unknown key, or invariant
// violation. `key` and `line` carry the location when known.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, std::string key = {}, int line = 0)
      : std::runtime_error(what), key_(std::move(key)), line_(line) {}

  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  std::string key_;
  int line_;
};

}  // namespace cellsel
