#include "hopcrack/error.h"

namespace hopcrack {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParams: return "InvalidParams";
    case ErrorCode::kInvalidMap: return "InvalidMap";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kNoInverse: return "NoInverse";
    case ErrorCode::kNoPeriodFound: return "NoPeriodFound";
    case ErrorCode::kRangeError: return "RangeError";
    case ErrorCode::kNotOnGrid: return "NotOnGrid";
    case ErrorCode::kAmbiguous: return "Ambiguous";
    case ErrorCode::kDesyncSuspected: return "DesyncSuspected";
    case ErrorCode::kNotTuned: return "NotTuned";
    case ErrorCode::kConfig: return "Config";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace hopcrack
