#pragma once

#include <stdexcept>
#include <string>

namespace lffuse {

enum class ErrorCode {
  Io,
  Parse,
  UnsupportedModel,
  UnsupportedGrid,
  InvalidVolume,
  Precondition,
  Parameter,
  BehindCamera,
  Camera,
  EmptyAnchors,
  InsufficientAnchors,
  Singular,
  InvalidMapping,
  ExcessiveTrim,
  Resample,
  Frame,
  Fusion,
  Guide,
  Scene,
  Metric,
  Rescale,
};

const char* to_string(ErrorCode code);

// Input/format problems map to exit code 2, numerical or degenerate ones to 3.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lffuse
