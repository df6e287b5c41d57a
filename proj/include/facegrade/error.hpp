#pragma once

#include <stdexcept>
#include <string>

namespace facegrade {

/// Error categories; numeric values double as CLI exit codes.
enum class errc : int {
  invalid_input = 2,
  skin_region_not_found = 3,
  solver_failure = 4,
};

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  errc code() const noexcept { return code_; }
  int exit_code() const noexcept { return static_cast<int>(code_); }

 private:
  errc code_;
};

}  // namespace facegrade
