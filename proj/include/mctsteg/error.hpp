#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mctsteg {

enum class Errc {
  Io,
  UnsupportedFormat,
  MalformedHeader,
  Truncated,
  MaxvalTooLarge,
  BadMagic,
  InvalidValue,
  DomainMismatch,
  DimensionMismatch,
  InfeasiblePayload,
  NonConvergence,
  InvalidArgument,
  IncompletePath,
  DegenerateData,
  Protocol,
  Timeout,
  Environment,
  Config,
};

std::string_view errc_name(Errc code);

/// Library-wide exception. `code()` identifies the failure class so callers
/// (and the CLI error records) can tell e.g. a truncated file from a bad header.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace mctsteg
