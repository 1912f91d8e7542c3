#pragma once

#include <stdexcept>
#include <string>

namespace vegbif {

/// Bad input: non-finite values, inconsistent grids, out-of-domain parameters.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Two independent computations of the same quantity disagree.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The tangent system is rank deficient by more than one (a branch point).
class SingularPointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A command-line request that cannot be honoured (unknown preset, bad range).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace vegbif
