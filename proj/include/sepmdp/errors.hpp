#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sepmdp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Model or argument fails its structural checks.
class InvalidModel : public Error {
 public:
  using Error::Error;
};

/// A chain gating downstream analysis is not irreducible. `actions` lists the
/// offending action indices when the failure is attributable to actions.
class NotIrreducible : public Error {
 public:
  explicit NotIrreducible(const std::string& what, std::vector<int> actions = {})
      : Error(what), actions_(std::move(actions)) {}
  const std::vector<int>& actions() const { return actions_; }

 private:
  std::vector<int> actions_;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

class AssemblyInfeasible : public Error {
 public:
  using Error::Error;
};

/// Poisson right-hand side is not orthogonal to the invariant distribution.
class CompatibilityViolation : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

class CapExceeded : public Error {
 public:
  using Error::Error;
};

/// Requested epsilon lies at or beyond the nonnegativity bound.
class EpsilonInfeasible : public Error {
 public:
  EpsilonInfeasible(const std::string& what, double bound) : Error(what), bound_(bound) {}
  double bound() const { return bound_; }

 private:
  double bound_;
};

/// Two independent solver routes disagree.
class CrossCheckFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace sepmdp
