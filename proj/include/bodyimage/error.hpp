#pragma once

#include <stdexcept>
#include <string>

namespace bodyimage {

enum class ErrorCode {
  kConfig,           // invalid configuration value
  kShape,            // tensor / image dimensions disagree
  kInvalidArgument,  // precondition violated
  kIo,               // file could not be opened / written
  kMalformedHeader,  // magic or header fields unreadable
  kTruncatedPayload, // payload shorter than the header declares
  kVersionMismatch,  // known magic, unsupported version
  kPayloadMismatch,  // declared dims disagree with payload length
  kDegenerateData,   // statistics undefined for the given samples
  kHashMismatch,     // artifact produced under a different config
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace bodyimage
