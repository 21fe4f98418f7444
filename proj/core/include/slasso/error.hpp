#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace slasso {

// Every failure raised by the library derives from Error so callers can
// catch one type; the subclasses let the CLI map failures to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class RankDeficiency : public NumericError {
 public:
  using NumericError::NumericError;
};

class CalibrationError : public NumericError {
 public:
  using NumericError::NumericError;
};

class UndefinedRegion : public Error {
 public:
  using Error::Error;
};

// Line search could not find an acceptable step. Carries the last iterate so
// the caller can still inspect where the solver got stuck.
class SolverStall : public NumericError {
 public:
  SolverStall(const std::string& what, Eigen::VectorXd last_iterate)
      : NumericError(what), last_iterate_(std::move(last_iterate)) {}

  const Eigen::VectorXd& last_iterate() const noexcept { return last_iterate_; }

 private:
  Eigen::VectorXd last_iterate_;
};

/// Rethrow the exception being handled with `prefix` prepended to its
/// message, keeping the category the CLI uses for exit codes. Call only from
/// inside a catch block.
[[noreturn]] inline void rethrow_tagged(const std::string& prefix) {
  try {
    throw;
  } catch (const SolverStall& e) {
    throw SolverStall(prefix + e.what(), e.last_iterate());
  } catch (const RankDeficiency& e) {
    throw RankDeficiency(prefix + e.what());
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(prefix + e.what());
  } catch (const DomainError& e) {
    throw DomainError(prefix + e.what());
  } catch (const ShapeError& e) {
    throw ShapeError(prefix + e.what());
  } catch (const std::exception& e) {
    throw Error(prefix + e.what());
  }
}

}  // namespace slasso
