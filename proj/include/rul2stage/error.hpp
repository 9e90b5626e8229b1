#ifndef RUL2STAGE_ERROR_HPP
#define RUL2STAGE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace rul2stage {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration, arguments, or incompatible model artifacts.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Tensor or feature-selection shapes that do not line up.
class ShapeError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Problems with input data: unreadable, malformed, or structurally invalid.
class DataError : public Error {
 public:
  using Error::Error;
};

class LoadError : public DataError {
 public:
  using DataError::DataError;
};

class StructuralError : public DataError {
 public:
  using DataError::DataError;
};

class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

class CellTooShortError : public DataError {
 public:
  using DataError::DataError;
};

class LabelingInfeasibleError : public DataError {
 public:
  using DataError::DataError;
};

/// Non-finite values or divergence during numerical work.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace rul2stage

#endif  // RUL2STAGE_ERROR_HPP
