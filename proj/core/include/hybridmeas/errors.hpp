#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hybridmeas {

/// Base class for every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the CLI error JSON.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

/// Invalid physical parameters or configuration. Carries every problem
/// found, not just the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }
  const char* kind() const noexcept override { return "validation"; }

 private:
  std::vector<std::string> problems_;
};

/// Argument outside the domain of a closed-form expression.
class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain"; }
};

/// Overflow, NaN, non-convergence or a broken numerical invariant.
class NumericalError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numerical"; }
};

/// Phase-space grid too small, too coarse or mismatched.
class GridError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "grid"; }
};

/// Fock cutoff too small for the state being reconstructed.
class CutoffError : public Error {
 public:
  CutoffError(const std::string& what, double measured_tail)
      : Error(what), measured_tail_(measured_tail) {}
  double measured_tail() const noexcept { return measured_tail_; }
  const char* kind() const noexcept override { return "cutoff"; }

 private:
  double measured_tail_;
};

}  // namespace hybridmeas
