#pragma once

#include <stdexcept>
#include <string>

namespace turnpike {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: malformed files, wrong shapes, unknown names.
class InputError : public Error {
 public:
  using Error::Error;
};

// An analysis reached a negative verdict (assumption fails, bound violated).
class AnalysisError : public Error {
 public:
  using Error::Error;
};

// Linear algebra or integration failure.
class NumericError : public AnalysisError {
 public:
  using AnalysisError::AnalysisError;
};

class RegularityError : public AnalysisError {
 public:
  RegularityError(double time, double margin, double delta)
      : AnalysisError("strong regularity violated at t=" + std::to_string(time) +
                      " (margin " + std::to_string(margin) + " < delta " +
                      std::to_string(delta) + ")"),
        time_(time),
        margin_(margin) {}

  double time() const noexcept { return time_; }
  double margin() const noexcept { return margin_; }

 private:
  double time_;
  double margin_;
};

}  // namespace turnpike
