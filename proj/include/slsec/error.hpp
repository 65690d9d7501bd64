// SPDX-License-Identifier: Apache-2.0
//
// Error taxonomy shared by every slsec module. Callers signal failures by
// throwing slsec::Error; the C API translates kinds into status codes.

#pragma once

#include <stdexcept>
#include <string>

namespace slsec {

enum class ErrorKind {
  kArgument,     // caller violated a precondition
  kDegenerate,   // input carries no usable signal (zero matrix, one cluster)
  kConvergence,  // iteration budget exhausted
  kFormat,       // malformed file, frame, or record
  kProtocol,     // parties disagree on shapes or bookkeeping
  kTraining,     // non-finite loss or gradient mid-run
  kUnsupported,  // operation not defined for this input class
  kIo,           // filesystem failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) raise(kind, msg);
}

}  // namespace slsec
