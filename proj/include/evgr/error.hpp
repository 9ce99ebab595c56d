#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace evgr {

// Every failure surfaced by the library carries one of these codes so
// callers (and the CLI exit-code mapping) can dispatch without string
// matching.
enum class Errc {
  NonemptyRequired,
  DuplicateLog,
  DuplicateCase,
  UnknownNode,
  KindMismatch,
  TimestampRegression,
  SoundnessRequired,
  CorruptStore,
  VersionMismatch,
  IoError,
  InvalidWindow,
  InvalidDicing,
  ParseError,
  MissingField,
  MissingColumn,
  PolicyError,
  UnknownRole,
  AccessDenied,
  BudgetExceeded,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void throw_error(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace evgr
