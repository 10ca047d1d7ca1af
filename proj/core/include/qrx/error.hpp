#pragma once

#include <stdexcept>
#include <string>

namespace qrx {

enum class ErrorKind {
  config,
  numeric,
  domain,
  classification,
  chart_domain,
  branch,
  window,
  growth,
  axis_proximity,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace qrx
