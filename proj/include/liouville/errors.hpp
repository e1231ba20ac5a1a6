#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace liouville {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments: points outside the domain, out-of-range parameters, ...
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A precondition of the operation does not hold (the result would be
// meaningless rather than merely inaccurate).
class Refused : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

}  // namespace liouville
