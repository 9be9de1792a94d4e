#include "bodyimage/error.hpp"

namespace bodyimage {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig: return "config error";
    case ErrorCode::kShape: return "shape error";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kMalformedHeader: return "malformed header";
    case ErrorCode::kTruncatedPayload: return "truncated payload";
    case ErrorCode::kVersionMismatch: return "version mismatch";
    case ErrorCode::kPayloadMismatch: return "payload length mismatch";
    case ErrorCode::kDegenerateData: return "degenerate data";
    case ErrorCode::kHashMismatch: return "config hash mismatch";
  }
  return "unknown error";
}

}  // namespace bodyimage
