#include "peakcast/autodiff.hpp"

#include <algorithm>
#include <string>

namespace peakcast::ad {

std::uint32_t Tape::push(double value, std::uint32_t lhs, double d_lhs, std::uint32_t rhs, double d_rhs) {
  if (!std::isfinite(value)) {
    throw Error(ErrorKind::NonFiniteValue, "non-finite intermediate at tape node " + std::to_string(nodes_.size()));
  }
  nodes_.push_back(Node{value, lhs, rhs, d_lhs, d_rhs});
  return static_cast<std::uint32_t>(nodes_.size() - 1);
}

Var Tape::variable(double value) {
  return Var(this, push(value, kNoOperand, 0.0, kNoOperand, 0.0), value);
}

std::vector<Var> Tape::variables(std::span<const double> values) {
  std::vector<Var> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(variable(v));
  return out;
}

void Tape::backward(const Var& output, std::vector<double>& adjoint) const {
  adjoint.assign(nodes_.size(), 0.0);
  if (output.index() >= nodes_.size()) return;
  adjoint[output.index()] = 1.0;
  for (std::size_t i = output.index() + 1; i-- > 0;) {
    const double a = adjoint[i];
    if (a == 0.0) continue;
    const Node& n = nodes_[i];
    if (n.lhs != kNoOperand) adjoint[n.lhs] += a * n.d_lhs;
    if (n.rhs != kNoOperand) adjoint[n.rhs] += a * n.d_rhs;
  }
}

std::vector<double> Tape::backward(const Var& output) const {
  std::vector<double> adjoint;
  backward(output, adjoint);
  return adjoint;
}

std::vector<double> Tape::gradient(const Var& output, std::span<const Var> leaves) const {
  const auto adjoint = backward(output);
  std::vector<double> g;
  g.reserve(leaves.size());
  for (const Var& v : leaves) g.push_back(adjoint[v.index()]);
  return g;
}

namespace {

Tape* tape_of(const Var& a, const Var& b) {
  Tape* t = a.tape() != nullptr ? a.tape() : b.tape();
  if (a.tape() != nullptr && b.tape() != nullptr && a.tape() != b.tape()) {
    throw Error(ErrorKind::InvalidParameter, "operands recorded on different tapes");
  }
  return t;
}

Var binary(const Var& a, const Var& b, double value, double da, double db) {
  Tape* t = tape_of(a, b);
  return Var(t, t->push(value, a.index(), da, b.index(), db), value);
}

Var unary(const Var& a, double value, double da) {
  Tape* t = a.tape();
  return Var(t, t->push(value, a.index(), da, kNoOperand, 0.0), value);
}

}  // namespace

Var& Var::operator+=(const Var& rhs) { return *this = *this + rhs; }
Var& Var::operator-=(const Var& rhs) { return *this = *this - rhs; }
Var& Var::operator*=(const Var& rhs) { return *this = *this * rhs; }

Var operator+(const Var& a, const Var& b) { return binary(a, b, a.value() + b.value(), 1.0, 1.0); }
Var operator-(const Var& a, const Var& b) { return binary(a, b, a.value() - b.value(), 1.0, -1.0); }
Var operator*(const Var& a, const Var& b) { return binary(a, b, a.value() * b.value(), b.value(), a.value()); }
Var operator/(const Var& a, const Var& b) {
  const double q = a.value() / b.value();
  return binary(a, b, q, 1.0 / b.value(), -q / b.value());
}
Var operator-(const Var& a) { return unary(a, -a.value(), -1.0); }

Var operator+(const Var& a, double b) { return unary(a, a.value() + b, 1.0); }
Var operator+(double a, const Var& b) { return unary(b, a + b.value(), 1.0); }
Var operator-(const Var& a, double b) { return unary(a, a.value() - b, 1.0); }
Var operator-(double a, const Var& b) { return unary(b, a - b.value(), -1.0); }
Var operator*(const Var& a, double b) { return unary(a, a.value() * b, b); }
Var operator*(double a, const Var& b) { return unary(b, a * b.value(), a); }
Var operator/(const Var& a, double b) { return unary(a, a.value() / b, 1.0 / b); }
Var operator/(double a, const Var& b) {
  const double q = a / b.value();
  return unary(b, q, -q / b.value());
}

Var exp(const Var& x) {
  const double e = std::exp(x.value());
  return unary(x, e, e);
}
Var log(const Var& x) { return unary(x, std::log(x.value()), 1.0 / x.value()); }
Var log1p(const Var& x) { return unary(x, std::log1p(x.value()), 1.0 / (1.0 + x.value())); }
Var tanh(const Var& x) {
  const double t = std::tanh(x.value());
  return unary(x, t, 1.0 - t * t);
}
Var sigmoid(const Var& x) {
  const double s = sigmoid(x.value());
  return unary(x, s, s * (1.0 - s));
}
Var relu(const Var& x) { return unary(x, relu(x.value()), x.value() > 0.0 ? 1.0 : 0.0); }
Var softplus(const Var& x) { return unary(x, softplus(x.value()), sigmoid(x.value())); }
Var max(const Var& a, const Var& b) {
  const bool left = a.value() >= b.value();
  return binary(a, b, left ? a.value() : b.value(), left ? 1.0 : 0.0, left ? 0.0 : 1.0);
}

double grad_check(const ScalarFunction& f, std::span<const double> x, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) {
    throw Error(ErrorKind::InvalidParameter, "grad_check eps must lie in [1e-7, 1e-3]");
  }
  std::vector<double> analytic;
  {
    Tape tape;
    const auto leaves = tape.variables(x);
    const Var out = f(tape, leaves);
    analytic = tape.gradient(out, leaves);
  }
  auto evaluate = [&](std::span<const double> point) {
    Tape tape;
    const auto leaves = tape.variables(point);
    return f(tape, leaves).value();
  };
  std::vector<double> probe(x.begin(), x.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double up = evaluate(probe);
    probe[i] = x[i] - eps;
    const double down = evaluate(probe);
    probe[i] = x[i];
    const double numeric = (up - down) / (2.0 * eps);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace peakcast::ad
