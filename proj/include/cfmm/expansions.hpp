#pragma once

// Multipole and local expansions in stored (compressed) and full form.
//
//   multipole:  phi(x) = sum_q D^q G(x - c) alpha_q,   alpha_q = sum_y w (c - y)^q / q!
//               stored as beta = M^T alpha, evaluated as <D_j G(x - c), beta>
//   local:      phi(x) = sum_q Theta_q (x - c)^q / q!,  Theta_q = sum_y w D^q G(c - y)
//               stored as theta = Theta restricted to j
//
// Local coefficients keep derivative values; factorials enter only at evaluation.

#include <span>
#include <stdexcept>
#include <vector>

#include "cfmm/geometry.hpp"
#include "cfmm/kernels.hpp"
#include "cfmm/plan.hpp"
#include "cfmm/scalar.hpp"

namespace cfmm {

template <class T>
struct MultipoleExpansion {
  Point center;
  double radius = 0;
  int order = 0;
  std::vector<T> beta;  // stored coefficients; full alpha when uncompressed
};

template <class T>
struct LocalExpansion {
  Point center;
  double radius = 0;
  int order = 0;
  std::vector<T> theta;
};

template <class T>
struct Sources {
  std::vector<Point> points;
  std::vector<T> weights;
};

namespace detail {

inline void check_center(const CompressionPlan& plan, const Point& c) {
  if (c.dim() != plan.dim()) throw std::invalid_argument("center dimension does not match plan");
}

/// out[i] = z^{nu(i)} / nu(i)! for all |nu(i)| <= p, one multiply per entry.
template <class T>
void scaled_monomials(const IndexTable& table, const Point& z, std::vector<T>& out) {
  out.resize(table.size());
  out[0] = T(1.0);
  for (std::size_t i = 1; i < table.size(); ++i) {
    const MultiIndex& m = table[i];
    const int a = lead_axis(m, true);
    out[i] = out[table.minus(i, a)] * T(z[a] / m[a]);
  }
}

/// out[i] = z^{nu(i)}.
template <class T>
void monomials(const IndexTable& table, const Point& z, std::vector<T>& out) {
  out.resize(table.size());
  out[0] = T(1.0);
  for (std::size_t i = 1; i < table.size(); ++i) {
    const int a = lead_axis(table[i], true);
    out[i] = out[table.minus(i, a)] * T(z[a]);
  }
}

template <class T>
void check_sources(const Sources<T>& s, int dim) {
  if (s.points.size() != s.weights.size()) throw std::invalid_argument("source points and weights differ in length");
  for (const auto& y : s.points)
    if (y.dim() != dim) throw std::invalid_argument("source dimension does not match plan");
}

template <class T>
T dot(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) throw std::invalid_argument("inner product length mismatch");
  T acc{};
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i == 0)
      acc = a[0] * b[0];
    else
      acc += a[i] * b[i];
  }
  return acc;
}

}  // namespace detail

/// Full alpha of a multipole expansion at `center`.
template <class T>
std::vector<T> p2m_alpha(const Sources<T>& src, const Point& center, const IndexTable& table) {
  detail::check_sources(src, table.dim());
  std::vector<T> alpha(table.size());
  std::vector<T> mono;
  for (std::size_t s = 0; s < src.points.size(); ++s) {
    detail::scaled_monomials<T>(table, center - src.points[s], mono);
    for (std::size_t i = 0; i < alpha.size(); ++i) alpha[i] += src.weights[s] * mono[i];
  }
  return alpha;
}

template <class T>
MultipoleExpansion<T> p2m(const Sources<T>& src, const Point& center, double radius, const CompressionPlan& plan) {
  detail::check_center(plan, center);
  return {center, radius, plan.order(), decompress_transpose(plan, p2m_alpha(src, center, plan.table()))};
}

template <class T>
MultipoleExpansion<T> p2m_uncompressed(const Sources<T>& src, const Point& center, double radius,
                                       const CompressionPlan& plan) {
  detail::check_center(plan, center);
  return {center, radius, plan.order(), p2m_alpha(src, center, plan.table())};
}

namespace detail {
inline void check_outside(const Point& x, const Point& c, double radius) {
  if (radius > 0 && (x - c).norm() < radius)
    throw std::domain_error("multipole evaluated inside its source ball");
}
}  // namespace detail

template <class T>
T m2p(const MultipoleExpansion<T>& e, const Point& x, const Kernel& k, const CompressionPlan& plan) {
  if (e.beta.size() != plan.stored_size()) throw std::invalid_argument("multipole length does not match plan");
  detail::check_outside(x, e.center, e.radius);
  const auto dj = derivatives_compressed<T>(k, x - e.center, plan);
  return detail::dot<T>(dj, e.beta);
}

template <class T>
T m2p_uncompressed(const MultipoleExpansion<T>& e, const Point& x, const Kernel& k, const CompressionPlan& plan) {
  if (e.beta.size() != plan.full_size()) throw std::invalid_argument("multipole length does not match plan");
  detail::check_outside(x, e.center, e.radius);
  const auto d = derivatives_unreduced<T>(k, x - e.center, plan.table());
  return detail::dot<T>(d, e.beta);
}

template <class T>
LocalExpansion<T> p2l(const Sources<T>& src, const Point& center, double radius, const CompressionPlan& plan,
                      const Kernel& k) {
  detail::check_center(plan, center);
  detail::check_sources(src, plan.dim());
  LocalExpansion<T> out{center, radius, plan.order(), std::vector<T>(plan.stored_size())};
  for (std::size_t s = 0; s < src.points.size(); ++s) {
    const auto dj = derivatives_compressed<T>(k, center - src.points[s], plan);
    for (std::size_t i = 0; i < dj.size(); ++i) out.theta[i] += src.weights[s] * dj[i];
  }
  return out;
}

template <class T>
LocalExpansion<T> p2l_uncompressed(const Sources<T>& src, const Point& center, double radius,
                                   const CompressionPlan& plan, const Kernel& k) {
  detail::check_center(plan, center);
  detail::check_sources(src, plan.dim());
  LocalExpansion<T> out{center, radius, plan.order(), std::vector<T>(plan.full_size())};
  for (std::size_t s = 0; s < src.points.size(); ++s) {
    const auto d = derivatives_unreduced<T>(k, center - src.points[s], plan.table());
    for (std::size_t i = 0; i < d.size(); ++i) out.theta[i] += src.weights[s] * d[i];
  }
  return out;
}

/// gamma = (full local coefficients) / nu!, the monomial coefficients.
template <class T>
std::vector<T> local_monomial_coefficients(const LocalExpansion<T>& e, const CompressionPlan& plan) {
  if (e.theta.size() != plan.stored_size()) throw std::invalid_argument("local length does not match plan");
  auto g = decompress(plan, e.theta);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = g[i] / T(plan.table().factorial(i));
  return g;
}

/// Evaluates sum_i gamma_i (x - c)^{nu(i)} for precomputed gamma.
template <class T>
T eval_monomials(std::span<const T> gamma, const Point& c, const Point& x, const IndexTable& table) {
  std::vector<T> mono;
  detail::monomials<T>(table, x - c, mono);
  return detail::dot<T>(gamma, mono);
}

template <class T>
T l2p(const LocalExpansion<T>& e, const Point& x, const CompressionPlan& plan) {
  const auto g = local_monomial_coefficients(e, plan);
  return eval_monomials<T>(g, e.center, x, plan.table());
}

template <class T>
T l2p_uncompressed(const LocalExpansion<T>& e, const Point& x, const CompressionPlan& plan) {
  if (e.theta.size() != plan.full_size()) throw std::invalid_argument("local length does not match plan");
  std::vector<T> mono;
  detail::scaled_monomials<T>(plan.table(), x - e.center, mono);
  return detail::dot<T>(e.theta, mono);
}

}  // namespace cfmm
