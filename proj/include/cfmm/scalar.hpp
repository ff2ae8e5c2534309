#pragma once

// Scalar abstraction for the expansion machinery.
//
// Every operator in this library is templated on the coefficient scalar T.
// Plain double / std::complex<double> give the fast path. Counted<double> and
// Counted<std::complex<double>> shadow every arithmetic operation and tally it
// in a per-thread FlopCounter, which is how operation counts are collected.
// The counted types carry the exact same values, so instrumentation never
// changes a numerical result.

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <type_traits>

namespace cfmm {

/// Tallies of floating point work, in real-arithmetic equivalents.
struct FlopCounter {
  std::uint64_t adds = 0;
  std::uint64_t muls = 0;
  std::uint64_t divs = 0;
  std::uint64_t special = 0;  // sqrt, log, exp, Bessel seeds, ...

  std::uint64_t total() const { return adds + muls + divs + special; }

  FlopCounter& operator+=(const FlopCounter& o) {
    adds += o.adds;
    muls += o.muls;
    divs += o.divs;
    special += o.special;
    return *this;
  }
  friend FlopCounter operator-(FlopCounter a, const FlopCounter& b) {
    a.adds -= b.adds;
    a.muls -= b.muls;
    a.divs -= b.divs;
    a.special -= b.special;
    return a;
  }
};

inline FlopCounter& thread_flops() {
  thread_local FlopCounter counter;
  return counter;
}

/// Measures the work done on the current thread while it is alive.
class FlopScope {
 public:
  FlopScope() : start_(thread_flops()) {}
  FlopCounter elapsed() const { return thread_flops() - start_; }

 private:
  FlopCounter start_;
};

namespace detail {
inline void count_add(std::uint64_t n = 1) { thread_flops().adds += n; }
inline void count_mul(std::uint64_t n = 1) { thread_flops().muls += n; }
inline void count_div(std::uint64_t n = 1) { thread_flops().divs += n; }
inline void count_special(std::uint64_t n = 1) { thread_flops().special += n; }
}  // namespace detail

template <class V>
class Counted;

template <class V>
struct is_counted : std::false_type {};
template <class V>
struct is_counted<Counted<V>> : std::true_type {};

/// A value that records each arithmetic operation applied to it.
/// V is double or std::complex<double>.
template <class V>
class Counted {
 public:
  using value_type = V;
  static constexpr bool complex = !std::is_same_v<V, double>;

  constexpr Counted() = default;
  constexpr Counted(double v) : v_(v) {}  // NOLINT(google-explicit-constructor)
  template <class W = V, class = std::enable_if_t<!std::is_same_v<W, double>>>
  constexpr Counted(std::complex<double> v) : v_(v) {}  // NOLINT
  template <class W = V, class = std::enable_if_t<!std::is_same_v<W, double>>>
  constexpr Counted(Counted<double> v) : v_(v.value()) {}  // NOLINT

  constexpr const V& value() const { return v_; }

  Counted& operator+=(const Counted& o) {
    detail::count_add(complex ? 2 : 1);
    v_ += o.v_;
    return *this;
  }
  Counted& operator-=(const Counted& o) {
    detail::count_add(complex ? 2 : 1);
    v_ -= o.v_;
    return *this;
  }
  Counted& operator*=(const Counted& o) {
    if constexpr (complex) {
      detail::count_mul(4);
      detail::count_add(2);
    } else {
      detail::count_mul();
    }
    v_ *= o.v_;
    return *this;
  }
  Counted& operator/=(const Counted& o) {
    if constexpr (complex) {
      detail::count_mul(6);
      detail::count_add(3);
      detail::count_div(2);
    } else {
      detail::count_div();
    }
    v_ /= o.v_;
    return *this;
  }

  friend Counted operator+(Counted a, const Counted& b) { return a += b; }
  friend Counted operator-(Counted a, const Counted& b) { return a -= b; }
  friend Counted operator*(Counted a, const Counted& b) { return a *= b; }
  friend Counted operator/(Counted a, const Counted& b) { return a /= b; }
  friend Counted operator-(const Counted& a) { return Counted(-a.v_); }
  friend bool operator==(const Counted& a, const Counted& b) { return a.v_ == b.v_; }

 private:
  V v_{};
};

// Mixed complex/real operations count as the cheaper real variant.
inline Counted<std::complex<double>> operator*(const Counted<std::complex<double>>& a,
                                               const Counted<double>& b) {
  detail::count_mul(2);
  return Counted<std::complex<double>>(a.value() * b.value());
}
inline Counted<std::complex<double>> operator*(const Counted<double>& b,
                                               const Counted<std::complex<double>>& a) {
  return a * b;
}
inline Counted<std::complex<double>> operator/(const Counted<std::complex<double>>& a,
                                               const Counted<double>& b) {
  detail::count_div(2);
  return Counted<std::complex<double>>(a.value() / b.value());
}

inline Counted<double> sqrt(const Counted<double>& x) {
  detail::count_special();
  return Counted<double>(std::sqrt(x.value()));
}
inline Counted<double> log(const Counted<double>& x) {
  detail::count_special();
  return Counted<double>(std::log(x.value()));
}
inline Counted<double> cos(const Counted<double>& x) {
  detail::count_special();
  return Counted<double>(std::cos(x.value()));
}
inline Counted<double> sin(const Counted<double>& x) {
  detail::count_special();
  return Counted<double>(std::sin(x.value()));
}

/// Compile-time facts about a coefficient scalar.
template <class T>
struct scalar_traits;

template <>
struct scalar_traits<double> {
  using real_type = double;
  using complex_type = std::complex<double>;
  static constexpr bool is_complex = false;
  static constexpr bool is_counted = false;
  static double from_complex(std::complex<double> c) {
    if (c.imag() != 0.0) throw std::invalid_argument("complex value in a real scalar context");
    return c.real();
  }
  static double from_complex_type(const complex_type& c) { return c.real(); }
  static std::complex<double> raw(double v) { return v; }
};

template <>
struct scalar_traits<std::complex<double>> {
  using real_type = double;
  using complex_type = std::complex<double>;
  static constexpr bool is_complex = true;
  static constexpr bool is_counted = false;
  static std::complex<double> from_complex(std::complex<double> c) { return c; }
  static std::complex<double> from_complex_type(const complex_type& c) { return c; }
  static std::complex<double> raw(std::complex<double> v) { return v; }
};

template <>
struct scalar_traits<Counted<double>> {
  using real_type = Counted<double>;
  using complex_type = Counted<std::complex<double>>;
  static constexpr bool is_complex = false;
  static constexpr bool is_counted = true;
  static Counted<double> from_complex(std::complex<double> c) {
    return scalar_traits<double>::from_complex(c);
  }
  static Counted<double> from_complex_type(const complex_type& c) { return c.value().real(); }
  static std::complex<double> raw(const Counted<double>& v) { return v.value(); }
};

template <>
struct scalar_traits<Counted<std::complex<double>>> {
  using real_type = Counted<double>;
  using complex_type = Counted<std::complex<double>>;
  static constexpr bool is_complex = true;
  static constexpr bool is_counted = true;
  static Counted<std::complex<double>> from_complex(std::complex<double> c) { return c; }
  static Counted<std::complex<double>> from_complex_type(const complex_type& c) { return c; }
  static std::complex<double> raw(const Counted<std::complex<double>>& v) { return v.value(); }
};

template <class T>
using real_t = typename scalar_traits<T>::real_type;
template <class T>
using complex_t = typename scalar_traits<T>::complex_type;

/// Uncounted value of any supported scalar, for diagnostics and error metrics.
template <class T>
std::complex<double> raw_value(const T& v) {
  return scalar_traits<T>::raw(v);
}

}  // namespace cfmm
