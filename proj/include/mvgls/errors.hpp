#pragma once

#include <stdexcept>
#include <string>

namespace mvgls {

/// Base class for all library errors.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
  public:
    using Error::Error;
};

/// Solver ran out of iterations; carries the last KKT residual seen.
class ConvergenceFailure : public Error {
  public:
    ConvergenceFailure(const std::string& msg, double kkt_residual)
        : Error(msg), kkt_residual_(kkt_residual) {}
    double kkt_residual() const { return kkt_residual_; }

  private:
    double kkt_residual_;
};

class SingularInput : public Error {
  public:
    using Error::Error;
};

/// A variance needed for standardization is zero (or numerically so).
class DegenerateVariance : public Error {
  public:
    DegenerateVariance(const std::string& msg, int index)
        : Error(msg), index_(index) {}
    /// Offending column/row index, or -1 when not tied to one entry.
    int index() const { return index_; }

  private:
    int index_ = -1;
};

class PreconditionViolation : public Error {
  public:
    using Error::Error;
};

class SingularDesign : public Error {
  public:
    using Error::Error;
};

class UndefinedRoc : public Error {
  public:
    using Error::Error;
};

class TooFewValues : public Error {
  public:
    using Error::Error;
};

class ParseError : public Error {
  public:
    ParseError(const std::string& msg, long line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
    explicit ParseError(const std::string& msg) : Error(msg) {}
    long line() const { return line_; }

  private:
    long line_ = -1;
};

}  // namespace mvgls
