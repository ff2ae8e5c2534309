#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "cfmm/geometry.hpp"
#include "cfmm/kernels.hpp"
#include "cfmm/multiindex.hpp"
#include "cfmm/scalar.hpp"

namespace cfmm::testing {

inline std::vector<Kernel> all_kernels() {
  return {Kernel(KernelId::laplace2d), Kernel(KernelId::laplace3d), Kernel(KernelId::biharmonic2d),
          Kernel(KernelId::helmholtz2d, 1.0), Kernel(KernelId::helmholtz3d, 1.0)};
}

template <class T>
std::vector<std::complex<double>> to_complex(const std::vector<T>& v) {
  std::vector<std::complex<double>> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(raw_value(x));
  return out;
}

/// Worst relative error over degree blocks: derivatives of different orders
/// differ by factorial factors, so each block is normalised by its own size.
inline double rel_err_by_degree(const std::vector<std::complex<double>>& got,
                                const std::vector<std::complex<double>>& ref, const std::vector<MultiIndex>& idx) {
  int maxdeg = 0;
  for (const auto& m : idx) maxdeg = std::max(maxdeg, m.order());
  std::vector<double> num(maxdeg + 1, 0), den(maxdeg + 1, 0);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const int g = idx[i].order();
    num[g] = std::max(num[g], std::abs(got[i] - ref[i]));
    den[g] = std::max(den[g], std::abs(ref[i]));
  }
  double worst = 0;
  for (int g = 0; g <= maxdeg; ++g)
    if (den[g] > 0) worst = std::max(worst, num[g] / den[g]);
  return worst;
}

inline double max_abs(const std::vector<std::complex<double>>& v) {
  double m = 0;
  for (const auto& x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double rel_err(const std::vector<std::complex<double>>& got, const std::vector<std::complex<double>>& ref) {
  double num = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) num = std::max(num, std::abs(got[i] - ref[i]));
  const double den = max_abs(ref);
  return den > 0 ? num / den : num;
}

inline double rel_err(std::complex<double> got, std::complex<double> ref) {
  return std::abs(got - ref) / std::abs(ref);
}

/// Uniform point on the annulus lo <= |x| <= hi.
inline Point random_annulus_point(int d, double lo, double hi, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(lo, hi);
  Point x(d);
  for (int a = 0; a < d; ++a) x[a] = n(rng);
  const double s = u(rng) / x.norm();
  return s * x;
}

template <class T>
std::vector<T> random_coeffs(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<T> v(n);
  for (auto& x : v) {
    if constexpr (scalar_traits<T>::is_complex)
      x = T(std::complex<double>(u(rng), u(rng)));
    else
      x = T(u(rng));
  }
  return v;
}

/// Calls f.template operator()<T>() with T = double for real kernels and
/// std::complex<double> otherwise.
template <class F>
void with_scalar(const Kernel& k, F&& f) {
  if (k.complex_valued())
    f.template operator()<std::complex<double>>();
  else
    f.template operator()<double>();
}

}  // namespace cfmm::testing
