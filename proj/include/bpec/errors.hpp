#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bpec {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Matrix or vector dimensions do not match what the model declares.
class StructuralError : public Error
{
public:
  using Error::Error;
};

/// The transition matrix is reducible, so the stationary law is not unique.
class NoUniqueStationary : public Error
{
public:
  using Error::Error;
};

/// An observation has zero predictive probability under the current belief.
class ZeroLikelihood : public Error
{
public:
  using Error::Error;
};

/// A requested table would exceed the configured size cap.
class ResourceLimit : public Error
{
public:
  using Error::Error;
};

/// The simplex solver did not make progress within its pivot budget.
class NumericalFailure : public Error
{
public:
  using Error::Error;
};

/// A caller broke a documented precondition (scheduler bug, bad witness, ...).
class ContractViolation : public Error
{
public:
  using Error::Error;
};

/// Missing file or unusable run configuration.
class ConfigError : public Error
{
public:
  using Error::Error;
};

/// Malformed input file. `where()` names the field path or line.
class FormatError : public Error
{
public:
  FormatError(std::string where, const std::string& what)
    : Error(where + ": " + what)
    , where_{std::move(where)}
  {}

  const std::string& where() const noexcept { return where_; }

private:
  std::string where_;
};

} // namespace bpec
