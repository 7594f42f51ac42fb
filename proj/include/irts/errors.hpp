#pragma once

#include <stdexcept>
#include <string>

namespace irts {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failures of the numerical core (CLI exit code 4).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class NearPiRotation : public NumericalError {
 public:
  explicit NearPiRotation(double angle)
      : NumericalError("rotation angle " + std::to_string(angle) +
                       " rad is too close to pi for a unique logarithm"),
        angle_(angle) {}
  double angle() const { return angle_; }

 private:
  double angle_;
};

class MalformedAlgebraElement : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonPsdCovariance : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularInnovationCovariance : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularPredictedCovariance : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularNormalEquations : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A numerical failure inside a sequential pass, tagged with the step index.
class StepError : public NumericalError {
 public:
  StepError(std::size_t step, const std::string& what)
      : NumericalError("step " + std::to_string(step) + ": " + what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// Invalid input data (CLI exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

class UnknownLandmark : public DataError {
 public:
  explicit UnknownLandmark(int id)
      : DataError("unknown landmark id " + std::to_string(id)), id_(id) {}
  int id() const { return id_; }

 private:
  int id_;
};

class LengthMismatch : public DataError {
 public:
  using DataError::DataError;
};

class SchemaError : public DataError {
 public:
  SchemaError(std::string file, std::size_t row, const std::string& reason)
      : DataError(file + ":" + std::to_string(row) + ": " + reason),
        file_(std::move(file)),
        row_(row) {}
  const std::string& file() const { return file_; }
  std::size_t row() const { return row_; }

 private:
  std::string file_;
  std::size_t row_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (CLI exit code 2).
class ConfigParse : public Error {
 public:
  ConfigParse(std::size_t line, std::string key, const std::string& reason)
      : Error(format(line, key, reason)), line_(line), key_(std::move(key)) {}
  std::size_t line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  static std::string format(std::size_t line, const std::string& key, const std::string& reason) {
    std::string out = "config";
    if (line > 0) out += ":" + std::to_string(line);
    if (!key.empty()) out += " [" + key + "]";
    return out + ": " + reason;
  }
  std::size_t line_;
  std::string key_;
};

}  // namespace irts
