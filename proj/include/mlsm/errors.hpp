#pragma once

#include <stdexcept>
#include <string>

namespace mlsm {

/// Error classes raised by the library. Each maps to a distinct process exit
/// code in the command-line front end.
enum class ErrorKind {
  kConfig = 3,
  kFormat = 4,
  kInvalidSlowness = 5,
  kData = 6,
  kSolver = 7,
  kIo = 8,
};

inline const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "configuration error";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kInvalidSlowness: return "invalid slowness";
    case ErrorKind::kData: return "data error";
    case ErrorKind::kSolver: return "solver error";
    case ErrorKind::kIo: return "i/o error";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};
struct FormatError : Error {
  explicit FormatError(const std::string& what) : Error(ErrorKind::kFormat, what) {}
};
struct InvalidSlownessError : Error {
  explicit InvalidSlownessError(const std::string& what)
      : Error(ErrorKind::kInvalidSlowness, what) {}
};
struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};
struct SolverError : Error {
  explicit SolverError(const std::string& what) : Error(ErrorKind::kSolver, what) {}
};
struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

}  // namespace mlsm
