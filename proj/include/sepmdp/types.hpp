#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>
#include <ostream>
#include <vector>

namespace sepmdp {

template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

/// Deterministic stationary policy: one action index per state.
class Policy {
 public:
  Policy() = default;
  explicit Policy(std::vector<int> actions) : actions_(std::move(actions)) {}
  Policy(std::initializer_list<int> actions) : actions_(actions) {}

  static Policy constant(Index n_states, int action) {
    return Policy(std::vector<int>(static_cast<std::size_t>(n_states), action));
  }

  Index size() const { return static_cast<Index>(actions_.size()); }
  int operator[](Index s) const { return actions_[static_cast<std::size_t>(s)]; }
  int& operator[](Index s) { return actions_[static_cast<std::size_t>(s)]; }

  const std::vector<int>& actions() const { return actions_; }

  /// True when every state uses the same action.
  bool is_constant() const {
    for (int a : actions_)
      if (a != actions_.front()) return false;
    return true;
  }

  bool is_valid(Index n_states, Index n_actions) const {
    if (size() != n_states) return false;
    for (int a : actions_)
      if (a < 0 || a >= n_actions) return false;
    return true;
  }

  friend bool operator==(const Policy&, const Policy&) = default;

  friend std::ostream& operator<<(std::ostream& os, const Policy& p) {
    os << '(';
    for (std::size_t i = 0; i < p.actions_.size(); ++i) os << (i ? "," : "") << p.actions_[i];
    return os << ')';
  }

 private:
  std::vector<int> actions_;
};

template <class Derived>
typename Derived::Scalar max_norm(const Eigen::MatrixBase<Derived>& x) {
  return x.size() == 0 ? typename Derived::Scalar(0) : x.cwiseAbs().maxCoeff();
}

}  // namespace sepmdp
