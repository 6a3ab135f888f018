#pragma once

// Scalar reverse-mode differentiation. A Tape records every primitive in
// evaluation order together with its local partials; backward() sweeps the
// record once in reverse. Every node's operands precede it by construction.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "peakcast/error.hpp"

namespace peakcast::ad {

inline constexpr std::uint32_t kNoOperand = 0xffffffffu;

struct Node {
  double value;
  std::uint32_t lhs;
  std::uint32_t rhs;
  double d_lhs;
  double d_rhs;
};

class Var;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Records a leaf. Gradients are reported for leaves; constants are leaves too.
  Var variable(double value);
  std::vector<Var> variables(std::span<const double> values);

  std::size_t size() const noexcept { return nodes_.size(); }
  const Node& node(std::size_t i) const { return nodes_[i]; }
  void clear() noexcept { nodes_.clear(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }

  /// Adjoints of every node with respect to `output`. `adjoint` is resized
  /// to size() and overwritten.
  void backward(const Var& output, std::vector<double>& adjoint) const;
  std::vector<double> backward(const Var& output) const;

  /// Gradient of `output` with respect to each of `leaves`, in order.
  std::vector<double> gradient(const Var& output, std::span<const Var> leaves) const;

  // Low-level recording hook used by the primitives.
  std::uint32_t push(double value, std::uint32_t lhs, double d_lhs, std::uint32_t rhs, double d_rhs);

 private:
  std::vector<Node> nodes_;
};

class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t index, double value) : tape_(tape), index_(index), value_(value) {}

  double value() const noexcept { return value_; }
  std::uint32_t index() const noexcept { return index_; }
  Tape* tape() const noexcept { return tape_; }

  Var& operator+=(const Var& rhs);
  Var& operator-=(const Var& rhs);
  Var& operator*=(const Var& rhs);

 private:
  Tape* tape_ = nullptr;
  std::uint32_t index_ = kNoOperand;
  double value_ = 0.0;
};

// Plain-double versions of the primitives. Generic model code calls these
// unqualified through namespace ad so that the double and Var instantiations
// perform the same floating-point operations in the same order.
using std::exp;
using std::log;
using std::log1p;
using std::tanh;

inline double value(double x) { return x; }
inline double value(const Var& x) { return x.value(); }

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
inline double relu(double x) { return x > 0.0 ? x : 0.0; }
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}
inline double max(double a, double b) { return a >= b ? a : b; }

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);

Var operator+(const Var& a, double b);
Var operator+(double a, const Var& b);
Var operator-(const Var& a, double b);
Var operator-(double a, const Var& b);
Var operator*(const Var& a, double b);
Var operator*(double a, const Var& b);
Var operator/(const Var& a, double b);
Var operator/(double a, const Var& b);

Var exp(const Var& x);
Var log(const Var& x);
Var log1p(const Var& x);
Var tanh(const Var& x);
Var sigmoid(const Var& x);
/// Derivative at exactly 0 is taken as 0.
Var relu(const Var& x);
Var softplus(const Var& x);
/// Ties route the gradient to `a`.
Var max(const Var& a, const Var& b);

using ScalarFunction = std::function<Var(Tape&, std::span<const Var>)>;

/// Maximum over coordinates of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8),
/// where numeric is the central difference with step eps.
double grad_check(const ScalarFunction& f, std::span<const double> x, double eps);

}  // namespace peakcast::ad
