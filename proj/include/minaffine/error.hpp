#pragma once

#include <stdexcept>
#include <string>

namespace minaffine {

/// Malformed input: bad parameters, unreadable files, size limits.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The problem violates a non-degeneracy hypothesis and has no
/// well-defined structured solution.
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure could not produce a result (e.g. no root bracket).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace minaffine
