#pragma once

#include <stdexcept>
#include <string>

namespace rover
{

/// Invalid configuration or parameter value.
class ConfigError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// A request the kinematic model cannot satisfy (mode/twist mismatch, steering limits).
class KinematicsError : public std::domain_error
{
public:
  using std::domain_error::domain_error;
};

/// Malformed or inconsistent input data. Carries the 1-based line number when known.
class DataError : public std::runtime_error
{
public:
  explicit DataError(const std::string & what, int line = 0)
  : std::runtime_error(line > 0 ? what + " at line " + std::to_string(line) : what), line_(line)
  {
  }

  int line() const {return line_;}

private:
  int line_;
};

/// Numerical procedure failed to converge or is ill-posed.
class NumericalError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

}  // namespace rover
