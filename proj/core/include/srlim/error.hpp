#pragma once

#include <stdexcept>
#include <string>

namespace srlim {

// Base for every error the toolkit raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (files, edge lists, masks).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A caller broke an operation's precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Non-finite values appeared during a numeric computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace srlim
