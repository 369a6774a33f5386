#pragma once

#include <stdexcept>
#include <string>

namespace phtmpc {

/// Invalid or inconsistent scenario / module configuration, detected at load time.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A caller broke a documented precondition (e.g. missing envelopes).
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

}  // namespace phtmpc
