#pragma once

#include <stdexcept>
#include <string>

namespace dmd {

enum class Errc {
  kInvalidArgument,
  kShapeMismatch,
  kSingularTransform,
  kOutOfBounds,
  kUnderdetermined,
  kNoConsensus,
  kEmptyInput,
  kInvalidCylinder,
  kNonFinite,
  kFormat,
  kIo,
};

const char* ErrcName(Errc code);

// Every library failure is reported through this type; `code()` tells callers
// which contract was violated without parsing the message.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(ErrcName(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace dmd
