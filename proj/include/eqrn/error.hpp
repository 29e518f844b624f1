#pragma once

#include <stdexcept>
#include <string>

namespace eqrn {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A numerical optimizer stopped without meeting its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double gradient_norm)
      : std::runtime_error(what + " (gradient norm " + std::to_string(gradient_norm) + ")"),
        gradient_norm_(gradient_norm) {}

  double gradient_norm() const { return gradient_norm_; }

 private:
  double gradient_norm_;
};

// Network training failed on every restart (e.g. NaN losses).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data, schema violations and I/O failures.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace eqrn
