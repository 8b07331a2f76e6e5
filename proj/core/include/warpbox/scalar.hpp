#pragma once

// Arithmetic modes for the whole library. Every algorithm is templated on a
// scalar type S; the three supported instantiations are:
//   - std::int64_t                exact integer (default for tests and CLI)
//   - warpbox::Rational           exact rational (arbitrary precision)
//   - double                      binary floating point, compared with a
//                                 relative tolerance where equality matters
// Exact modes never round, so equal costs compare equal bit for bit.

#include <cmath>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace warpbox {

using Rational = boost::multiprecision::cpp_rational;

// Input/configuration problems (bad files, invalid couplings, bad flags).
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Broken internal invariants (preprocessing holes, Monge violations, ...).
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

template <class S>
struct ScalarTraits {
  static constexpr bool exact = true;
  static std::string to_string(const S& v);
};

template <>
struct ScalarTraits<std::int64_t> {
  static constexpr bool exact = true;
  static std::string to_string(std::int64_t v) { return std::to_string(v); }
};

template <>
struct ScalarTraits<double> {
  static constexpr bool exact = false;
  static std::string to_string(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }
};

template <>
struct ScalarTraits<Rational> {
  static constexpr bool exact = true;
  static std::string to_string(const Rational& v) { return v.str(); }
};

// Relative comparison for float mode; exact modes use operator==.
inline bool approx_equal(double a, double b, double tau = 1e-9) {
  double diff = std::abs(a - b);
  double scale = std::max({std::abs(a), std::abs(b), 1.0});
  return diff <= tau * scale;
}

template <class S>
bool scalar_equal(const S& a, const S& b) {
  if constexpr (ScalarTraits<S>::exact) {
    return a == b;
  } else {
    return approx_equal(a, b);
  }
}

template <class S>
S abs_diff(const S& a, const S& b) {
  return a < b ? S(b - a) : S(a - b);
}

// Scalar-or-infinity. Infinity is a real variant, not a big sentinel value,
// so exact modes cannot overflow through it. It absorbs under addition and
// compares greater than every finite value.
template <class S>
struct Extended {
  S value{};
  bool infinite = false;

  Extended() = default;
  explicit Extended(S v) : value(std::move(v)) {}

  static Extended infinity() {
    Extended e;
    e.infinite = true;
    return e;
  }

  bool is_finite() const { return !infinite; }

  const S& finite() const {
    if (infinite) throw InternalError("Extended: infinity where a finite value is required");
    return value;
  }

  Extended operator+(const Extended& o) const {
    if (infinite || o.infinite) return infinity();
    return Extended(S(value + o.value));
  }
  Extended operator+(const S& o) const {
    if (infinite) return infinity();
    return Extended(S(value + o));
  }

  friend bool operator==(const Extended& a, const Extended& b) {
    if (a.infinite || b.infinite) return a.infinite == b.infinite;
    return a.value == b.value;
  }
  friend bool operator<(const Extended& a, const Extended& b) {
    if (a.infinite) return false;
    if (b.infinite) return true;
    return a.value < b.value;
  }
  friend bool operator<=(const Extended& a, const Extended& b) { return a < b || a == b; }
  friend bool operator>(const Extended& a, const Extended& b) { return b < a; }
};

template <class S>
S scalar_from_int(long long v) {
  return S(v);
}

}  // namespace warpbox
