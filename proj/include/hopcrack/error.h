#ifndef HOPCRACK_ERROR_H
#define HOPCRACK_ERROR_H

#include <stdexcept>
#include <string>
#include <string_view>

namespace hopcrack {

enum class ErrorCode {
  kInvalidParams,
  kInvalidMap,
  kOutOfRange,
  kNoInverse,
  kNoPeriodFound,
  kRangeError,
  kNotOnGrid,
  kAmbiguous,
  kDesyncSuspected,
  kNotTuned,
  kConfig,
  kIo,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hopcrack

#endif  // HOPCRACK_ERROR_H
