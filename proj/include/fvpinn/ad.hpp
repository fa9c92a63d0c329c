#pragma once

// Scalar automatic differentiation: a reverse-mode tape (Var) and a
// forward-mode tangent type (Dual<T>). Dual<Var> gives forward-over-reverse,
// which is how the loss differentiates through d/dt of the network output.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fvpinn::ad {

class NonFiniteError : public std::runtime_error {
 public:
  explicit NonFiniteError(const std::string& primitive)
      : std::runtime_error("non-finite value produced by primitive '" + primitive + "'"),
        primitive_(primitive) {}
  const std::string& primitive() const noexcept { return primitive_; }

 private:
  std::string primitive_;
};

/// Linear record of elementary operations. Each node has at most two
/// parents with the local partial derivatives stored alongside.
class Tape {
 public:
  static constexpr std::int32_t kNone = -1;

  struct Node {
    double w0;
    double w1;
    std::int32_t p0;
    std::int32_t p1;
  };

  std::int32_t leaf() {
    nodes_.push_back({0.0, 0.0, kNone, kNone});
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }
  std::int32_t unary(std::int32_t p, double w) {
    nodes_.push_back({w, 0.0, p, kNone});
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }
  std::int32_t binary(std::int32_t p0, double w0, std::int32_t p1, double w1) {
    nodes_.push_back({w0, w1, p0, p1});
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }

  /// Adjoints of every node with respect to `root`.
  std::vector<double> adjoints(std::int32_t root) const;

  void note_non_finite(const char* primitive) {
    if (first_non_finite_ == nullptr) first_non_finite_ = primitive;
  }
  const char* first_non_finite() const noexcept { return first_non_finite_; }

  std::size_t size() const noexcept { return nodes_.size(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }
  void clear() {
    nodes_.clear();
    first_non_finite_ = nullptr;
  }

  static Tape* active() noexcept { return active_; }

 private:
  friend class TapeScope;
  std::vector<Node> nodes_;
  const char* first_non_finite_ = nullptr;
  static thread_local Tape* active_;
};

/// Makes `tape` the recording target on this thread for the scope lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape) : previous_(Tape::active_) { Tape::active_ = &tape; }
  ~TapeScope() { Tape::active_ = previous_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Reverse-mode scalar. Constants carry index kNone and never touch the tape.
class Var {
 public:
  Var() = default;
  Var(double v) : v_(v) {}  // NOLINT(google-explicit-constructor)

  static Var make_leaf(double v) {
    Var r(v);
    r.i_ = Tape::active()->leaf();
    return r;
  }

  double value() const noexcept { return v_; }
  std::int32_t index() const noexcept { return i_; }
  bool is_constant() const noexcept { return i_ == Tape::kNone; }

  // Builders used by the elementary functions below.
  static Var from_unary(const char* name, double v, const Var& a, double da) {
    Var r(v);
    if (!std::isfinite(v)) note(name);
    if (!a.is_constant()) r.i_ = Tape::active()->unary(a.i_, da);
    return r;
  }
  static Var from_binary(const char* name, double v, const Var& a, double da, const Var& b,
                         double db) {
    Var r(v);
    if (!std::isfinite(v)) note(name);
    if (a.is_constant() && b.is_constant()) return r;
    Tape* t = Tape::active();
    if (a.is_constant())
      r.i_ = t->unary(b.i_, db);
    else if (b.is_constant())
      r.i_ = t->unary(a.i_, da);
    else
      r.i_ = t->binary(a.i_, da, b.i_, db);
    return r;
  }

  Var& operator+=(const Var& o) { return *this = *this + o; }
  Var& operator-=(const Var& o) { return *this = *this - o; }
  Var& operator*=(const Var& o) { return *this = *this * o; }
  Var& operator/=(const Var& o) { return *this = *this / o; }

  friend Var operator+(const Var& a, const Var& b) {
    return from_binary("add", a.v_ + b.v_, a, 1.0, b, 1.0);
  }
  friend Var operator-(const Var& a, const Var& b) {
    return from_binary("sub", a.v_ - b.v_, a, 1.0, b, -1.0);
  }
  friend Var operator*(const Var& a, const Var& b) {
    return from_binary("mul", a.v_ * b.v_, a, b.v_, b, a.v_);
  }
  friend Var operator/(const Var& a, const Var& b) {
    const double inv = 1.0 / b.v_;
    const double q = a.v_ * inv;
    return from_binary("div", q, a, inv, b, -q * inv);
  }
  friend Var operator-(const Var& a) { return from_unary("neg", -a.v_, a, -1.0); }

  friend bool operator<(const Var& a, const Var& b) { return a.v_ < b.v_; }
  friend bool operator>(const Var& a, const Var& b) { return a.v_ > b.v_; }
  friend bool operator<=(const Var& a, const Var& b) { return a.v_ <= b.v_; }
  friend bool operator>=(const Var& a, const Var& b) { return a.v_ >= b.v_; }

 private:
  static void note(const char* name) {
    if (Tape* t = Tape::active()) t->note_non_finite(name);
  }

  double v_ = 0.0;
  std::int32_t i_ = Tape::kNone;
};

// ---------------------------------------------------------------------------
// Elementary functions. Overloads for double, then Var, then Dual<T>; generic
// code calls them qualified (ad::sqrt(x)) so one template serves all scalars.

inline double value(double x) { return x; }
inline double value(const Var& x) { return x.value(); }

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}
inline double sqrt(double x) { return std::sqrt(x); }
inline double cbrt(double x) { return std::cbrt(x); }
inline double tanh(double x) { return std::tanh(x); }
inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
/// Subgradient 0 at the origin.
inline double abs(double x) { return std::fabs(x); }
/// Ties go to the first argument.
inline double max(double a, double b) { return a >= b ? a : b; }
inline double min(double a, double b) { return a <= b ? a : b; }

inline Var sqrt(const Var& a) {
  const double r = std::sqrt(a.value());
  return Var::from_unary("sqrt", r, a, 0.5 / r);
}
inline Var cbrt(const Var& a) {
  const double r = std::cbrt(a.value());
  return Var::from_unary("cbrt", r, a, 1.0 / (3.0 * r * r));
}
inline Var tanh(const Var& a) {
  const double r = std::tanh(a.value());
  return Var::from_unary("tanh", r, a, 1.0 - r * r);
}
inline Var exp(const Var& a) {
  const double r = std::exp(a.value());
  return Var::from_unary("exp", r, a, r);
}
inline Var log(const Var& a) {
  return Var::from_unary("log", std::log(a.value()), a, 1.0 / a.value());
}
inline Var sin(const Var& a) {
  return Var::from_unary("sin", std::sin(a.value()), a, std::cos(a.value()));
}
inline Var cos(const Var& a) {
  return Var::from_unary("cos", std::cos(a.value()), a, -std::sin(a.value()));
}
inline Var sigmoid(const Var& a) {
  const double s = sigmoid(a.value());
  return Var::from_unary("sigmoid", s, a, s * (1.0 - s));
}
inline Var softplus(const Var& a) {
  return Var::from_unary("softplus", softplus(a.value()), a, sigmoid(a.value()));
}
inline Var abs(const Var& a) {
  const double v = a.value();
  const double d = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
  return Var::from_unary("abs", std::fabs(v), a, d);
}
inline Var max(const Var& a, const Var& b) { return a.value() >= b.value() ? a : b; }
inline Var min(const Var& a, const Var& b) { return a.value() <= b.value() ? a : b; }

// ---------------------------------------------------------------------------
// Forward-mode tangent over any scalar T (double or Var).

template <class T>
struct Dual {
  T v{};
  T d{};

  Dual() = default;
  Dual(double x) : v(x), d(0.0) {}  // NOLINT(google-explicit-constructor)
  Dual(T value, T tangent) : v(std::move(value)), d(std::move(tangent)) {}

  Dual& operator+=(const Dual& o) { return *this = *this + o; }
  Dual& operator-=(const Dual& o) { return *this = *this - o; }
  Dual& operator*=(const Dual& o) { return *this = *this * o; }
  Dual& operator/=(const Dual& o) { return *this = *this / o; }

  friend Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.d + b.d}; }
  friend Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.d - b.d}; }
  friend Dual operator*(const Dual& a, const Dual& b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
  friend Dual operator/(const Dual& a, const Dual& b) {
    T q = a.v / b.v;
    return {q, (a.d - q * b.d) / b.v};
  }
  friend Dual operator-(const Dual& a) { return {-a.v, -a.d}; }

  friend bool operator<(const Dual& a, const Dual& b) { return value(a.v) < value(b.v); }
  friend bool operator>(const Dual& a, const Dual& b) { return value(a.v) > value(b.v); }
  friend bool operator<=(const Dual& a, const Dual& b) { return value(a.v) <= value(b.v); }
  friend bool operator>=(const Dual& a, const Dual& b) { return value(a.v) >= value(b.v); }
};

template <class T>
double value(const Dual<T>& x) {
  return value(x.v);
}

template <class T>
Dual<T> sqrt(const Dual<T>& a) {
  T r = ad::sqrt(a.v);
  return {r, a.d / (r * 2.0)};
}
template <class T>
Dual<T> cbrt(const Dual<T>& a) {
  T r = ad::cbrt(a.v);
  return {r, a.d / (r * r * 3.0)};
}
template <class T>
Dual<T> tanh(const Dual<T>& a) {
  T r = ad::tanh(a.v);
  return {r, a.d * (T(1.0) - r * r)};
}
template <class T>
Dual<T> exp(const Dual<T>& a) {
  T r = ad::exp(a.v);
  return {r, a.d * r};
}
template <class T>
Dual<T> log(const Dual<T>& a) {
  return {ad::log(a.v), a.d / a.v};
}
template <class T>
Dual<T> sin(const Dual<T>& a) {
  return {ad::sin(a.v), a.d * ad::cos(a.v)};
}
template <class T>
Dual<T> cos(const Dual<T>& a) {
  return {ad::cos(a.v), -(a.d * ad::sin(a.v))};
}
template <class T>
Dual<T> sigmoid(const Dual<T>& a) {
  T s = ad::sigmoid(a.v);
  return {s, a.d * s * (T(1.0) - s)};
}
template <class T>
Dual<T> softplus(const Dual<T>& a) {
  return {ad::softplus(a.v), a.d * ad::sigmoid(a.v)};
}
template <class T>
Dual<T> abs(const Dual<T>& a) {
  const double v = value(a.v);
  if (v > 0.0) return a;
  if (v < 0.0) return -a;
  return {ad::abs(a.v), T(0.0)};
}
template <class T>
Dual<T> max(const Dual<T>& a, const Dual<T>& b) {
  return value(a) >= value(b) ? a : b;
}
template <class T>
Dual<T> min(const Dual<T>& a, const Dual<T>& b) {
  return value(a) <= value(b) ? a : b;
}

// ---------------------------------------------------------------------------

struct GradientResult {
  double value = 0.0;
  std::vector<double> gradient;
};

using Program = std::function<Var(std::span<const Var>)>;

/// Evaluates `program` at `params` on a fresh tape and returns the value with
/// its exact gradient. Throws NonFiniteError naming the first primitive that
/// produced a non-finite intermediate.
GradientResult value_and_grad(const Program& program, std::span<const double> params);

/// d/dt of a point function f(x, y, t) -> 3 outputs, by forward-mode tangent
/// in t. `f` must be generic over its scalar type.
template <class T, class F>
std::array<T, 3> time_partial(F&& f, const T& x, const T& y, const T& t) {
  using D = Dual<T>;
  const std::array<D, 3> out = f(D(x, T(0.0)), D(y, T(0.0)), D(t, T(1.0)));
  return {out[0].d, out[1].d, out[2].d};
}

}  // namespace fvpinn::ad
