#pragma once

#include <stdexcept>
#include <string>

namespace beamsel {

// Every failure raised by the library derives from Error so the CLI can map
// the concrete type onto a distinct exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

#define BEAMSEL_ERROR(Name, Base, Tag)                    \
  class Name : public Base {                              \
   public:                                                \
    using Base::Base;                                     \
    const char* kind() const noexcept override { return Tag; } \
  };

BEAMSEL_ERROR(DimensionError, Error, "dimension")
BEAMSEL_ERROR(RangeError, Error, "range")
BEAMSEL_ERROR(ArgumentError, Error, "argument")
BEAMSEL_ERROR(StateError, Error, "state")
BEAMSEL_ERROR(NumericError, Error, "numeric")
BEAMSEL_ERROR(PreconditionError, Error, "precondition")
BEAMSEL_ERROR(IncompleteTableError, Error, "incomplete-table")
BEAMSEL_ERROR(BalanceError, Error, "balance")
BEAMSEL_ERROR(ConversionError, Error, "conversion")
BEAMSEL_ERROR(DetectionError, Error, "detection")
BEAMSEL_ERROR(EncodingError, RangeError, "encoding")
BEAMSEL_ERROR(FormatError, Error, "format")
BEAMSEL_ERROR(TruncationError, FormatError, "truncated")
BEAMSEL_ERROR(VersionError, FormatError, "version")
BEAMSEL_ERROR(ConfigError, Error, "config")
BEAMSEL_ERROR(MissingInputError, Error, "missing-input")

#undef BEAMSEL_ERROR

}  // namespace beamsel
