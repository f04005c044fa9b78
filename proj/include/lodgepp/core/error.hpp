#pragma once

#include <stdexcept>
#include <string>

namespace lodgepp {

// Base class for all library errors. Subclasses pick the CLI exit code:
// DataError -> 3, NumericError -> 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};

struct IoError : DataError {
  using DataError::DataError;
};
struct ShapeMismatch : DataError {
  using DataError::DataError;
};
struct SequenceTooShort : DataError {
  using DataError::DataError;
};
struct AudioTooShort : DataError {
  using DataError::DataError;
};
struct EmptySequence : DataError {
  using DataError::DataError;
};
struct TooFewSamples : DataError {
  using DataError::DataError;
};
struct NoMusicBeats : DataError {
  using DataError::DataError;
};
struct OverlapConflict : DataError {
  using DataError::DataError;
};

struct DegenerateRotation : NumericError {
  using NumericError::NumericError;
};
struct NotARotation : NumericError {
  using NumericError::NumericError;
};
struct InvalidSchedule : NumericError {
  using NumericError::NumericError;
};
struct ModelFailure : NumericError {
  using NumericError::NumericError;
};
struct DegenerateCovariance : NumericError {
  using NumericError::NumericError;
};
struct DivergedTraining : NumericError {
  using NumericError::NumericError;
};

}  // namespace lodgepp
