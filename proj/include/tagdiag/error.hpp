#pragma once

#include <stdexcept>
#include <string>

namespace tagdiag {

// Process exit codes used by the command-line tool. Library code reports
// failures by throwing `error` carrying one of these categories.
enum class error_code : int {
  input = 2,       // malformed files, bad arguments, misaligned predictions
  undefined = 3,   // a statistic has no defined value on the given data
  internal = 4,    // an internal invariant did not hold
};

inline const char* error_code_name(error_code code) {
  switch (code) {
    case error_code::input: return "E_INPUT";
    case error_code::undefined: return "E_UNDEFINED";
    case error_code::internal: return "E_INTERNAL";
  }
  return "E_UNKNOWN";
}

class error : public std::runtime_error {
 public:
  error(error_code code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  error_code code() const noexcept { return code_; }

 private:
  error_code code_;
};

[[noreturn]] inline void throw_input(const std::string& message) {
  throw error(error_code::input, message);
}

[[noreturn]] inline void throw_undefined(const std::string& message) {
  throw error(error_code::undefined, message);
}

}  // namespace tagdiag
