#pragma once

#include <stdexcept>
#include <string>

namespace sdifl {

// Root of every error the library throws. The CLI maps these to exit codes:
// validation problems (bad input, schema, usage) are 1, everything else 2.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual bool is_validation() const { return false; }
};

class ValidationError : public Error {
 public:
  using Error::Error;
  bool is_validation() const override { return true; }
};

class FileMissing : public ValidationError { public: using ValidationError::ValidationError; };
class DecodeError : public ValidationError { public: using ValidationError::ValidationError; };
class ShapeError : public ValidationError { public: using ValidationError::ValidationError; };
class InvalidKind : public ValidationError { public: using ValidationError::ValidationError; };
class SchemaError : public ValidationError { public: using ValidationError::ValidationError; };
class EmptyInput : public ValidationError { public: using ValidationError::ValidationError; };
class TooSmall : public ValidationError { public: using ValidationError::ValidationError; };
class DivisibilityError : public ValidationError { public: using ValidationError::ValidationError; };
class InvalidDistribution : public ValidationError { public: using ValidationError::ValidationError; };
class UsageError : public ValidationError { public: using ValidationError::ValidationError; };

class CodecError : public Error { public: using Error::Error; };
class NonFiniteLoss : public Error { public: using Error::Error; };
class CodecHashMismatch : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };

}  // namespace sdifl
