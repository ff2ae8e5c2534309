#pragma once

// Green's functions and their Cartesian derivative tables.
//
// Normalizations:
//   laplace2d     G = log r
//   laplace3d     G = 1 / r
//   biharmonic2d  G = r^2 log r
//   helmholtz2d   G = (i/4) H0(kappa r),          H0 the Hankel function of the first kind
//   helmholtz3d   G = exp(i kappa r) / (4 pi r)
//
// Laplace and biharmonic derivatives come from a Leibniz recurrence on
//   r^2 dG/dx_a = x_a (lambda G + P(x)),
// with (lambda, P) = (0, 1), (-1, 0), (2, r^2) respectively. Applying D^q,
// q = m - e_a, gives each D^m G from O(d) lower derivatives, all of which lie in
// any downward-closed index set. Helmholtz derivatives go through the radial
// chain g_i = ((1/r) d/dr)^i G, using D_a g_i = x_a g_{i+1}.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfmm/geometry.hpp"
#include "cfmm/multiindex.hpp"
#include "cfmm/pde.hpp"
#include "cfmm/plan.hpp"
#include "cfmm/scalar.hpp"

namespace cfmm {

class SingularPointError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class KernelId { laplace2d, laplace3d, biharmonic2d, helmholtz2d, helmholtz3d };

class Kernel {
 public:
  Kernel() = default;
  explicit Kernel(KernelId id, double kappa = 0.0) : id_(id), kappa_(kappa) {
    if (is_helmholtz() && !(kappa > 0.0)) throw std::invalid_argument("Helmholtz kernel needs kappa > 0");
  }

  static Kernel from_name(const std::string& name, double kappa = 0.0) {
    if (name == "laplace2d") return Kernel(KernelId::laplace2d);
    if (name == "laplace3d") return Kernel(KernelId::laplace3d);
    if (name == "biharmonic2d") return Kernel(KernelId::biharmonic2d);
    if (name == "helmholtz2d") return Kernel(KernelId::helmholtz2d, kappa);
    if (name == "helmholtz3d") return Kernel(KernelId::helmholtz3d, kappa);
    throw std::invalid_argument("unknown kernel '" + name + "'");
  }

  KernelId id() const { return id_; }
  double kappa() const { return kappa_; }
  bool is_helmholtz() const { return id_ == KernelId::helmholtz2d || id_ == KernelId::helmholtz3d; }
  bool complex_valued() const { return is_helmholtz(); }

  int dim() const {
    return (id_ == KernelId::laplace3d || id_ == KernelId::helmholtz3d) ? 3 : 2;
  }

  std::string name() const {
    switch (id_) {
      case KernelId::laplace2d: return "laplace2d";
      case KernelId::laplace3d: return "laplace3d";
      case KernelId::biharmonic2d: return "biharmonic2d";
      case KernelId::helmholtz2d: return "helmholtz2d";
      case KernelId::helmholtz3d: return "helmholtz3d";
    }
    return "?";
  }

  PdeOperator pde() const {
    const int d = dim();
    std::vector<PdeTerm> terms;
    if (id_ == KernelId::biharmonic2d) {
      terms = {{MultiIndex{4, 0}, 1.0}, {MultiIndex{2, 2}, 2.0}, {MultiIndex{0, 4}, 1.0}};
    } else {
      for (int a = 0; a < d; ++a) terms.push_back({MultiIndex::unit(d, a, 2), 1.0});
      if (is_helmholtz()) terms.push_back({MultiIndex(d), kappa_ * kappa_});
    }
    return PdeOperator(d, terms);
  }

  /// Distances below this are treated as the singular point.
  static constexpr double singular_radius = 1e-12;

  std::complex<double> eval(const Point& x) const {
    if (x.dim() != dim()) throw std::invalid_argument("point dimension does not match kernel");
    const double r = x.norm();
    if (r < singular_radius) throw SingularPointError("kernel evaluated at its singular point");
    return eval_radial(r);
  }

  std::complex<double> eval_radial(double r) const {
    switch (id_) {
      case KernelId::laplace2d: return std::log(r);
      case KernelId::laplace3d: return 1.0 / r;
      case KernelId::biharmonic2d: return r * r * std::log(r);
      case KernelId::helmholtz2d: {
        const double z = kappa_ * r;
        const std::complex<double> h0(std::cyl_bessel_j(0.0, z), std::cyl_neumann(0.0, z));
        return std::complex<double>(0.0, 0.25) * h0;
      }
      case KernelId::helmholtz3d:
        return std::exp(std::complex<double>(0.0, kappa_ * r)) / (4.0 * std::numbers::pi * r);
    }
    return 0.0;
  }

  friend bool operator==(const Kernel& a, const Kernel& b) { return a.id_ == b.id_ && a.kappa_ == b.kappa_; }

 private:
  KernelId id_ = KernelId::laplace2d;
  double kappa_ = 0.0;
};

namespace detail {

template <class T>
T make_scalar(std::complex<double> v) {
  if constexpr (scalar_traits<T>::is_complex) {
    return T(v);
  } else {
    return T(v.real());
  }
}

template <class T>
void require_scalar_for(const Kernel& k) {
  if constexpr (!scalar_traits<T>::is_complex) {
    if (k.complex_valued()) throw std::invalid_argument(k.name() + " needs a complex scalar");
  }
}

inline void check_point(const Kernel& k, const Point& x) {
  if (x.dim() != k.dim()) throw std::invalid_argument("point dimension does not match kernel");
  if (x.norm() < Kernel::singular_radius) throw SingularPointError("derivatives requested at the singular point");
}

}  // namespace detail

/// ((1/r) d/dr)^i G for i = 0..i_max.
template <class T>
std::vector<T> radial_chain(const Kernel& k, double r, int i_max) {
  detail::require_scalar_for<T>(k);
  if (!(r >= Kernel::singular_radius)) throw SingularPointError("radial chain at r = 0");
  if (i_max < 0) throw std::invalid_argument("i_max must be non-negative");
  std::vector<T> g(i_max + 1);
  const T inv_r2 = T(1.0) / (T(r) * T(r));
  switch (k.id()) {
    case KernelId::laplace3d:
      g[0] = T(1.0) / T(r);
      for (int i = 0; i < i_max; ++i) g[i + 1] = T(-(2.0 * i + 1.0)) * g[i] * inv_r2;
      break;
    case KernelId::laplace2d:
      g[0] = detail::make_scalar<T>(std::log(r));
      if constexpr (scalar_traits<T>::is_counted) detail::count_special();
      if (i_max >= 1) g[1] = inv_r2;
      for (int i = 1; i < i_max; ++i) g[i + 1] = T(-2.0 * i) * g[i] * inv_r2;
      break;
    case KernelId::biharmonic2d: {
      const T lr = detail::make_scalar<T>(std::log(r));
      if constexpr (scalar_traits<T>::is_counted) detail::count_special();
      g[0] = T(r) * T(r) * lr;
      if (i_max >= 1) g[1] = T(2.0) * lr + T(1.0);
      if (i_max >= 2) g[2] = T(2.0) * inv_r2;
      for (int i = 2; i < i_max; ++i) g[i + 1] = T(-2.0 * (i - 1)) * g[i] * inv_r2;
      break;
    }
    case KernelId::helmholtz2d:
    case KernelId::helmholtz3d: {
      // Y-type parts recur upward stably; J-type parts are taken per order.
      const double kap = k.kappa();
      const double z = kap * r;
      const bool two_d = k.id() == KernelId::helmholtz2d;
      std::vector<double> y(i_max + 2);
      if (two_d) {
        y[0] = std::cyl_neumann(0.0, z);
        y[1] = std::cyl_neumann(1.0, z);
        for (int n = 1; n <= i_max; ++n) y[n + 1] = (2.0 * n / z) * y[n] - y[n - 1];
      } else {
        y[0] = -std::cos(z) / z;
        y[1] = -std::cos(z) / (z * z) - std::sin(z) / z;
        for (int n = 1; n <= i_max; ++n) y[n + 1] = ((2.0 * n + 1.0) / z) * y[n] - y[n - 1];
      }
      const std::complex<double> pre =
          two_d ? std::complex<double>(0.0, 0.25) : std::complex<double>(0.0, kap / (4.0 * std::numbers::pi));
      double scale = 1.0;  // (-kappa^2 / z)^i
      for (int i = 0; i <= i_max; ++i) {
        const double jn = two_d ? std::cyl_bessel_j(static_cast<double>(i), z)
                                : std::sph_bessel(static_cast<unsigned>(i), z);
        g[i] = detail::make_scalar<T>(pre * scale * std::complex<double>(jn, y[i]));
        scale *= -kap * kap / z;
      }
      if constexpr (scalar_traits<T>::is_counted) {
        detail::count_special(static_cast<std::uint64_t>(i_max + 3));
        detail::count_mul(static_cast<std::uint64_t>(6 * (i_max + 1)));
        detail::count_add(static_cast<std::uint64_t>(2 * (i_max + 1)));
      }
      break;
    }
  }
  return g;
}

enum class DerivativeMethod { automatic, leibniz, radial };

struct DerivativeOptions {
  DerivativeMethod method = DerivativeMethod::automatic;
  /// Leibniz recurrence steps along the first positive axis (false: the last).
  bool lead_first_axis = true;
};

namespace detail {

inline int lead_axis(const MultiIndex& m, bool first) {
  const int d = m.dim();
  if (first) {
    for (int a = 0; a < d; ++a)
      if (m[a] > 0) return a;
  } else {
    for (int a = d - 1; a >= 0; --a)
      if (m[a] > 0) return a;
  }
  return -1;
}

// D^q of the monomial x^e, evaluated at x.
inline double monomial_derivative(const MultiIndex& e, const MultiIndex& q, const Point& x) {
  double v = 1.0;
  for (int i = 0; i < e.dim(); ++i) {
    if (q[i] > e[i]) return 0.0;
    for (int f = e[i]; f > e[i] - q[i]; --f) v *= f;
    for (int f = 0; f < e[i] - q[i]; ++f) v *= x[i];
  }
  return v;
}

/// Fills out[pos] = D^{table[pos]} G(x) for every pos in `positions`, which
/// must be ascending and downward closed.
template <class T>
void fill_derivatives(const Kernel& k, const Point& x, const IndexTable& table, std::span<const int> positions,
                      std::vector<T>& out, const DerivativeOptions& opt) {
  require_scalar_for<T>(k);
  check_point(k, x);
  const int d = table.dim();
  DerivativeMethod method = opt.method;
  if (method == DerivativeMethod::automatic)
    method = k.is_helmholtz() ? DerivativeMethod::radial : DerivativeMethod::leibniz;
  if (method == DerivativeMethod::leibniz && k.is_helmholtz())
    throw std::invalid_argument("Leibniz recurrence is not available for Helmholtz kernels");
  out.assign(table.size(), T{});

  if (method == DerivativeMethod::radial) {
    int p = 0;
    for (int pos : positions) p = std::max(p, table[pos].order());
    const auto g = radial_chain<T>(k, x.norm(), p);
    std::vector<T> next(table.size()), cur(table.size());
    for (int i = p; i >= 0; --i) {
      for (int pos : positions) {
        const MultiIndex& m = table[pos];
        if (m.order() > p - i) break;  // positions are graded
        if (pos == 0) {
          cur[0] = g[i];
          continue;
        }
        const int a = lead_axis(m, opt.lead_first_axis);
        const int down = table.minus(pos, a);
        T v = T(x[a]) * next[down];
        if (m[a] >= 2) v += T(static_cast<double>(m[a] - 1)) * next[table.minus(down, a)];
        cur[pos] = v;
      }
      std::swap(cur, next);
    }
    for (int pos : positions) out[pos] = next[pos];
    return;
  }

  double lambda = 0;
  switch (k.id()) {
    case KernelId::laplace2d: lambda = 0; break;
    case KernelId::laplace3d: lambda = -1; break;
    case KernelId::biharmonic2d: lambda = 2; break;
    default: break;
  }
  const double r2 = x.norm2();
  const T inv_r2 = T(1.0) / T(r2);
  const T lam(lambda);
  for (int pos : positions) {
    const MultiIndex& m = table[pos];
    if (pos == 0) {
      out[0] = make_scalar<T>(k.eval_radial(std::sqrt(r2)));
      if constexpr (scalar_traits<T>::is_counted) count_special(2);
      continue;
    }
    const int a = lead_axis(m, opt.lead_first_axis);
    MultiIndex q = m;
    --q[a];
    const int qpos = table.minus(pos, a);
    // Polynomial part D^q (x_a P), nonzero only for |q| <= 3.
    double poly_part = 0.0;
    if (q.order() <= 3) {
      if (k.id() == KernelId::laplace2d) {
        poly_part = monomial_derivative(MultiIndex::unit(d, a), q, x);
      } else if (k.id() == KernelId::biharmonic2d) {
        for (int b = 0; b < d; ++b) {
          MultiIndex e = MultiIndex::unit(d, a);
          e[b] += 2;
          poly_part += monomial_derivative(e, q, x);
        }
      }
    }
    T acc = make_scalar<T>(poly_part);
    if (lambda != 0.0) {
      acc += lam * T(x[a]) * out[qpos];
      if (q[a] >= 1) acc += lam * T(static_cast<double>(q[a])) * out[table.minus(qpos, a)];
    }
    for (int b = 0; b < d; ++b) {
      if (q[b] == 0) continue;
      const int mb = table.minus(pos, b);
      acc -= T(2.0 * q[b] * x[b]) * out[mb];
      if (q[b] >= 2) acc -= T(static_cast<double>(q[b] * (q[b] - 1))) * out[table.minus(mb, b)];
    }
    out[pos] = acc * inv_r2;
  }
}

}  // namespace detail

/// D^m G(x) for m in nu(j), in stored order.
template <class T>
std::vector<T> derivatives_compressed(const Kernel& k, const Point& x, const CompressionPlan& plan,
                                      const DerivativeOptions& opt = {}) {
  if (!(plan.pde() == k.pde())) throw std::invalid_argument("plan was built for a different PDE than the kernel");
  std::vector<T> scratch;
  detail::fill_derivatives<T>(k, x, plan.table(), plan.j(), scratch, opt);
  return restrict_to_stored(plan, scratch);
}

/// All D^m G(x) with |m| <= plan.order(), by decompressing the stored subset.
template <class T>
std::vector<T> derivatives_full(const Kernel& k, const Point& x, const CompressionPlan& plan,
                                const DerivativeOptions& opt = {}) {
  return decompress(plan, derivatives_compressed<T>(k, x, plan, opt));
}

/// Full table up to q_max in the kernel's natural ordering.
template <class T>
std::vector<T> derivatives_full(const Kernel& k, const Point& x, int q_max, const DerivativeOptions& opt = {}) {
  const PdeOperator pde = k.pde();
  if (q_max >= pde.order()) return derivatives_full<T>(k, x, CompressionPlan(pde, q_max), opt);
  const IndexTable table(ordering_for(pde), q_max);
  std::vector<int> all(table.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  std::vector<T> out;
  detail::fill_derivatives<T>(k, x, table, all, out, opt);
  return out;
}

/// Every D^m G(x) for |m| <= table.order(), computed by the recurrence without
/// using the PDE to eliminate entries.
template <class T>
std::vector<T> derivatives_unreduced(const Kernel& k, const Point& x, const IndexTable& table,
                                     const DerivativeOptions& opt = {}) {
  std::vector<int> all(table.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  std::vector<T> out;
  detail::fill_derivatives<T>(k, x, table, all, out, opt);
  return out;
}

}  // namespace cfmm
