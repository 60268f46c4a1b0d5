#pragma once

#include <stdexcept>
#include <string>

namespace salgan {

/// Base of every error raised by the library. kind() is a stable,
/// machine-parseable name used by the CLI error prefix.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define SALGAN_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  };

SALGAN_DEFINE_ERROR(ShapeError)
SALGAN_DEFINE_ERROR(UsageError)
SALGAN_DEFINE_ERROR(ConfigError)
SALGAN_DEFINE_ERROR(StateError)
SALGAN_DEFINE_ERROR(FormatError)
SALGAN_DEFINE_ERROR(IoError)

#undef SALGAN_DEFINE_ERROR

}  // namespace salgan
