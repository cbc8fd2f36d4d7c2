#pragma once

#include <stdexcept>
#include <string>

namespace tapauc {

/// Invalid configuration values (network shape, hyperparameters, CLI flags).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A caller broke a documented precondition (empty class, stale cache, size mismatch).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Non-finite values appeared in a loss or a gradient.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problems reading or interpreting a dataset file.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
[[noreturn]] inline void contract_failure(const std::string& what) { throw ContractViolation(what); }
}  // namespace detail

#define TAPAUC_EXPECTS(cond, msg)                                   \
  do {                                                              \
    if (!(cond)) ::tapauc::detail::contract_failure(std::string(msg)); \
  } while (false)

}  // namespace tapauc
