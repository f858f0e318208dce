#pragma once

#include <stdexcept>
#include <string>

namespace ucsdp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Case-file shape problems: missing/extra keys, wrong JSON types.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Structurally valid case that breaks a data invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class FactorizationError : public Error {
 public:
  using Error::Error;
};

// Conic solution whose residuals are too large to trust its duals for a cut.
class StaleDuals : public Error {
 public:
  using Error::Error;
};

class TooLarge : public Error {
 public:
  using Error::Error;
};

class PenaltyDegenerate : public Error {
 public:
  using Error::Error;
};

// Short class name for machine-readable error lines.
inline const char* error_kind(const std::exception& e) {
  if (dynamic_cast<const SchemaError*>(&e)) return "SchemaError";
  if (dynamic_cast<const ValidationError*>(&e)) return "ValidationError";
  if (dynamic_cast<const IndexError*>(&e)) return "IndexError";
  if (dynamic_cast<const DimensionError*>(&e)) return "DimensionError";
  if (dynamic_cast<const ModelError*>(&e)) return "ModelError";
  if (dynamic_cast<const NumericalError*>(&e)) return "NumericalError";
  if (dynamic_cast<const FactorizationError*>(&e)) return "FactorizationError";
  if (dynamic_cast<const StaleDuals*>(&e)) return "StaleDuals";
  if (dynamic_cast<const TooLarge*>(&e)) return "TooLarge";
  if (dynamic_cast<const PenaltyDegenerate*>(&e)) return "PenaltyDegenerate";
  return "Error";
}

}  // namespace ucsdp
