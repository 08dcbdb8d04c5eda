#pragma once

#include <stdexcept>
#include <string>

namespace mrs {

// A caller broke a documented precondition (out-of-bounds state, infeasible action, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed input file; message carries the row/column location.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent configuration, e.g. a parameter file trained for another action mode.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training blew up (parameters left the finite range we allow).
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void expects(bool cond, const std::string& what) {
  if (!cond) throw ContractViolation(what);
}

}  // namespace detail
}  // namespace mrs
