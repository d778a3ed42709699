#pragma once

#include <stdexcept>
#include <string>

namespace currictl {

// Error taxonomy; the CLI maps these onto exit codes.
enum class errc {
  usage,                  // bad command-line / malformed request
  io,                     // unreadable or unwritable file
  data,                   // corrupt or inconsistent input data
  config,                 // invalid configuration (bad order, missing word list, ...)
  degenerate_input,       // input too small/empty for the requested metric
  insufficient_data,      // not enough rows for a statistic
  undefined_correlation,  // zero variance in a ranked vector
};

class error : public std::runtime_error {
 public:
  error(errc kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  errc kind() const { return kind_; }

 private:
  errc kind_;
};

[[noreturn]] inline void fail(errc kind, const std::string& what) { throw error(kind, what); }

}  // namespace currictl
