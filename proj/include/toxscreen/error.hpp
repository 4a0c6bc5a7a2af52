#pragma once

#include <stdexcept>
#include <string>

namespace toxscreen {

enum class ErrorKind {
  format,      // bad magic, version, malformed record
  length,      // truncated or oversized payload
  data,        // non-finite values, shape mismatch
  validation,  // inconsistent inputs, bad configuration
  numeric,     // training or optimisation diverged
  io,          // file could not be opened, read or written
};

const char* to_string(ErrorKind kind);

// Process exit code used by the CLI for an error of this kind.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace toxscreen
