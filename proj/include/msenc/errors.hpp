#pragma once

#include <stdexcept>
#include <string>

namespace msenc {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(what) {}
};

// Structural model failure: unidentified design, structural zero, zero margin.
class ModelError : public Error {
 public:
  explicit ModelError(const std::string& what) : Error(what) {}
};

// Iterative procedure exhausted its iteration budget.
class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& what) : Error(what) {}
};

}  // namespace msenc
