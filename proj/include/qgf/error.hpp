#pragma once

#include <stdexcept>
#include <string>

namespace qgf {

enum class ErrorKind {
  invalid_argument,
  config,
  infeasible_budget,
  disconnected,
  parse,
  oracle_failure,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

const char* to_string(ErrorKind kind) noexcept;

}  // namespace qgf
