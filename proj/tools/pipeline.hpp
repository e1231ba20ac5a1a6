#pragma once

#include <ostream>

#include "liouville/errors.hpp"

namespace liouville::cli {

// Bad command line or a missing upstream artifact.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Runs one command.  Exit status: 0 success, 1 computation error, 2 usage
// error (including unreadable or invalid configs).
int run_pipeline(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace liouville::cli
