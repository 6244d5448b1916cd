#pragma once

#include <stdexcept>

namespace apw {

/// A numerical computation broke down (solver failure, rank deficiency).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace apw
