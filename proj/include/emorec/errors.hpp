#ifndef EMOREC_ERRORS_HPP
#define EMOREC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace emorec {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Label or taxonomy inconsistency (unknown label, length/k mismatch, taxonomy mix-up).
class TaxonomyError : public Error {
 public:
  using Error::Error;
};

/// Input violates a precondition (non-finite value, empty sequence, bad range request).
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// Structural violation of a record format (wrong field count, wrong point count).
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A value falls outside its declared domain.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Tensor/layer extent mismatch; message carries expected vs actual extents.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A pose cannot yield features (required landmark invisible, zero-area bounding box).
class DegeneratePoseError : public Error {
 public:
  using Error::Error;
};

/// A modality required by the active configuration is absent from the input.
class MissingModalityError : public Error {
 public:
  using Error::Error;
};

/// Invalid module or pipeline configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Annotation provider has no record for the requested image id.
class MissingAnnotationError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; message carries the line number where known.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint or data file is corrupt or truncated.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint format version is not supported.
class VersionError : public Error {
 public:
  using Error::Error;
};

/// Fewer modality outputs than an operation needs.
class InsufficientModalityError : public Error {
 public:
  using Error::Error;
};

/// Timing measurement produced an unusable result.
class MeasurementError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value where the computation requires finite arithmetic.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace emorec

#endif  // EMOREC_ERRORS_HPP
