#include "toxscreen/error.hpp"

namespace toxscreen {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::format: return "format error";
    case ErrorKind::length: return "length error";
    case ErrorKind::data: return "data error";
    case ErrorKind::validation: return "validation error";
    case ErrorKind::numeric: return "numeric failure";
    case ErrorKind::io: return "I/O error";
  }
  return "error";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::numeric: return 3;
    case ErrorKind::io: return 4;
    default: return 2;
  }
}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace toxscreen
