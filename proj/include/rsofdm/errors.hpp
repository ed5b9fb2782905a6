#pragma once

#include <stdexcept>
#include <string>

namespace rsofdm {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDimension : public Error {
 public:
  using Error::Error;
};

class InvalidIndex : public Error {
 public:
  using Error::Error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class DelayExceedsCp : public Error {
 public:
  DelayExceedsCp(int samples, int cp_len)
      : Error("path delay of " + std::to_string(samples) +
              " samples exceeds the cyclic prefix of " +
              std::to_string(cp_len) + " samples"),
        samples_(samples),
        cp_len_(cp_len) {}

  int samples() const { return samples_; }
  int cp_len() const { return cp_len_; }

 private:
  int samples_;
  int cp_len_;
};

/// Raised when an MMSE quantity would divide by a zero received power.
class DivisionByZero : public Error {
 public:
  using Error::Error;
};

/// A convex subproblem (or the outer problem it came from) has no feasible
/// point. `constraint` names the violated constraint.
class Infeasible : public Error {
 public:
  explicit Infeasible(std::string constraint)
      : Error("infeasible: " + constraint), constraint_(std::move(constraint)) {}

  const std::string& constraint() const { return constraint_; }

 private:
  std::string constraint_;
};

}  // namespace rsofdm
