#pragma once

// Translation operators on compressed expansions.
//
// With h = c2 - c1 and H_a[n] = h_a^n / n!:
//   M2M  sigma_q = sum_{s <= q} H^{q-s} (E beta)_s,  new beta = M^T sigma
//   L2L  Theta'_eta = sum_zeta H^zeta Theta_{eta + zeta},  Theta = M theta
//   M2L  theta_eta = sum_{q in j} D^{q + eta} G(c2 - c1) beta_q
//
// M2M and L2L work slice by slice. Within a slice S_{l,k} the axis l is
// handled by one pass over the other components, and every other axis by a
// one-dimensional shift on a (d-1)-dimensional simplex, so the cost is
// O(|t| d p^d) instead of the O(p^{2d}) of the plain double sum.
//
// M2L is a correlation on the index grid; it is evaluated as a circulant
// convolution on a grid of shape 2M_i + 1, where M_i bounds the stored
// exponents on axis i. Derivatives are scaled by t^{-|n|} and coefficients by
// t^{|q|} to keep the transformed data in a moderate range.

#include <complex>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "cfmm/expansions.hpp"
#include "cfmm/fft.hpp"
#include "cfmm/geometry.hpp"
#include "cfmm/kernels.hpp"
#include "cfmm/plan.hpp"
#include "cfmm/scalar.hpp"

namespace cfmm {

/// Slice bookkeeping for M2M and L2L on one plan. Holds a pointer to the plan,
/// which must outlive it.
class Translator {
 public:
  explicit Translator(const CompressionPlan& plan) : plan_(&plan), d_(plan.dim()), p_(plan.order()) {
    if (d_ < 2) throw std::invalid_argument("translations need dimension >= 2");
    const IndexTable& t = plan.table();
    sub_ = IndexTable(GradedOrdering(d_ - 1, 0), p_);
    sub_of_.assign(d_, std::vector<int>(t.size()));
    lift_start_.assign(d_, std::vector<int>(sub_.size() + 1));
    lift_pos_.assign(d_, {});
    for (int l = 0; l < d_; ++l) {
      for (std::size_t pos = 0; pos < t.size(); ++pos) sub_of_[l][pos] = sub_.position(drop(t[pos], l));
      for (std::size_t sp = 0; sp < sub_.size(); ++sp) {
        lift_start_[l][sp] = static_cast<int>(lift_pos_[l].size());
        for (int lvl = 0; lvl + sub_[sp].order() <= p_; ++lvl) lift_pos_[l].push_back(t.position(lift(sub_[sp], l, lvl)));
      }
      lift_start_[l][sub_.size()] = static_cast<int>(lift_pos_[l].size());
    }
    members_.assign(plan.slices().size(), {});
    for (std::size_t k = 0; k < plan.stored_size(); ++k) members_[plan.slice_of(k)].push_back(static_cast<int>(k));
  }

  const CompressionPlan& plan() const { return *plan_; }

  /// Compressed multipole translated to `center`.
  template <class T>
  MultipoleExpansion<T> m2m(const MultipoleExpansion<T>& e, const Point& center, double radius) const {
    check_stored(e.beta.size());
    const CompressionPlan& plan = *plan_;
    std::vector<std::vector<std::pair<int, T>>> groups(plan.slices().size());
    for (std::size_t s = 0; s < groups.size(); ++s)
      for (int k : members_[s]) groups[s].push_back({sub_of_[plan.slices()[s].axis][plan.j()[k]], e.beta[k]});
    const auto sigma = shift_multipole<T>(plan.slices(), groups, center - e.center);
    return {center, radius, p_, decompress_transpose(plan, sigma)};
  }

  /// Full (uncompressed) multipole coefficients translated to `center`.
  template <class T>
  MultipoleExpansion<T> m2m_uncompressed(const MultipoleExpansion<T>& e, const Point& center, double radius) const {
    check_full(e.beta.size());
    const auto [slices, groups] = full_groups<T>(e.beta);
    return {center, radius, p_, shift_multipole<T>(slices, groups, center - e.center)};
  }

  /// Compressed local expansion re-centred at `center`.
  template <class T>
  LocalExpansion<T> l2l(const LocalExpansion<T>& e, const Point& center, double radius) const {
    check_stored(e.theta.size());
    const CompressionPlan& plan = *plan_;
    const auto full = decompress(plan, e.theta);
    LocalExpansion<T> out{center, radius, p_, std::vector<T>(plan.stored_size())};
    const Point h = center - e.center;
    const auto H = shift_powers<T>(h);
    std::vector<T> a;
    for (std::size_t s = 0; s < plan.slices().size(); ++s) {
      const Slice sl = plan.slices()[s];
      shift_local<T>(full, sl, H, a);
      for (int k : members_[s]) out.theta[k] = a[sub_of_[sl.axis][plan.j()[k]]];
    }
    return out;
  }

  /// Full local coefficients (derivative convention) re-centred at `center`.
  template <class T>
  LocalExpansion<T> l2l_uncompressed(const LocalExpansion<T>& e, const Point& center, double radius) const {
    check_full(e.theta.size());
    LocalExpansion<T> out{center, radius, p_, std::vector<T>(plan_->full_size())};
    const auto H = shift_powers<T>(center - e.center);
    std::vector<T> a;
    for (int lvl = 0; lvl <= p_; ++lvl) {
      shift_local<T>(e.theta, Slice{0, lvl}, H, a);
      for (std::size_t sp = 0; sp < count_sub(p_ - lvl); ++sp) out.theta[lift_pos_[0][lift_start_[0][sp] + lvl]] = a[sp];
    }
    return out;
  }

 private:
  static MultiIndex drop(const MultiIndex& m, int axis) {
    MultiIndex r(m.dim() - 1);
    for (int a = 0, b = 0; a < m.dim(); ++a)
      if (a != axis) r[b++] = m[a];
    return r;
  }
  static MultiIndex lift(const MultiIndex& sub, int axis, int level) {
    MultiIndex r(sub.dim() + 1);
    for (int a = 0, b = 0; a < r.dim(); ++a) r[a] = a == axis ? level : sub[b++];
    return r;
  }
  // Sub-table axis corresponding to full axis b (b != l).
  static int sub_axis(int b, int l) { return b < l ? b : b - 1; }

  std::size_t count_sub(int order) const { return static_cast<std::size_t>(count(order, d_ - 1)); }
  int lifted(int l, std::size_t sp, int level) const { return lift_pos_[l][lift_start_[l][sp] + level]; }

  void check_stored(std::size_t n) const {
    if (n != plan_->stored_size()) throw std::invalid_argument("expansion length does not match plan");
  }
  void check_full(std::size_t n) const {
    if (n != plan_->full_size()) throw std::invalid_argument("expansion length does not match full size");
  }

  template <class T>
  std::vector<std::vector<T>> shift_powers(const Point& h) const {
    std::vector<std::vector<T>> H(d_, std::vector<T>(p_ + 1));
    for (int a = 0; a < d_; ++a) {
      H[a][0] = T(1.0);
      if (p_ >= 1) H[a][1] = T(h[a]);
      for (int n = 2; n <= p_; ++n) H[a][n] = H[a][n - 1] * T(h[a] / n);
    }
    return H;
  }

  template <class T>
  std::pair<std::vector<Slice>, std::vector<std::vector<std::pair<int, T>>>> full_groups(
      const std::vector<T>& alpha) const {
    std::vector<Slice> slices;
    std::vector<std::vector<std::pair<int, T>>> groups(p_ + 1);
    for (int lvl = 0; lvl <= p_; ++lvl) slices.push_back({0, lvl});
    const IndexTable& t = plan_->table();
    for (std::size_t pos = 0; pos < t.size(); ++pos) groups[t[pos][0]].push_back({sub_of_[0][pos], alpha[pos]});
    return {slices, groups};
  }

  // sigma = sum over slices of the translated slice contents, full length.
  template <class T>
  std::vector<T> shift_multipole(const std::vector<Slice>& slices,
                                 const std::vector<std::vector<std::pair<int, T>>>& groups, const Point& h) const {
    const auto H = shift_powers<T>(h);
    std::vector<T> sigma(plan_->full_size());
    std::vector<T> tau(sub_.size());
    for (std::size_t s = 0; s < slices.size(); ++s) {
      if (groups[s].empty()) continue;
      const int l = slices[s].axis;
      const int k = slices[s].level;
      const std::size_t n_sub = count_sub(p_ - k);
      std::fill(tau.begin(), tau.begin() + static_cast<std::ptrdiff_t>(n_sub), T{});
      for (const auto& [sp, v] : groups[s]) tau[sp] = v;
      // Nested partial sums along each remaining axis, in place from the top.
      for (int b = 0; b < d_; ++b) {
        if (b == l) continue;
        const int sb = sub_axis(b, l);
        for (std::size_t sp = n_sub; sp-- > 0;) {
          const int v = sub_[sp][sb];
          if (v == 0) continue;
          T acc = tau[sp];
          int cur = static_cast<int>(sp);
          for (int w = 1; w <= v; ++w) {
            cur = sub_.minus(cur, sb);
            acc += H[b][w] * tau[cur];
          }
          tau[sp] = acc;
        }
      }
      for (std::size_t sp = 0; sp < n_sub; ++sp) {
        const T v = tau[sp];
        const int room = p_ - k - sub_[sp].order();
        sigma[lifted(l, sp, k)] += v;
        for (int t = 1; t <= room; ++t) sigma[lifted(l, sp, k + t)] += H[l][t] * v;
      }
    }
    return sigma;
  }

  // a[sp] = Theta' on slice (l, k) for all |sub| <= p - k.
  template <class T>
  void shift_local(const std::vector<T>& full, Slice sl, const std::vector<std::vector<T>>& H,
                   std::vector<T>& a) const {
    const int l = sl.axis;
    const int k = sl.level;
    const std::size_t n_sub = count_sub(p_ - k);
    a.assign(n_sub, T{});
    for (std::size_t sp = 0; sp < n_sub; ++sp) {
      const int room = p_ - k - sub_[sp].order();
      T acc = full[lifted(l, sp, k)];
      for (int u = 1; u <= room; ++u) acc += H[l][u] * full[lifted(l, sp, k + u)];
      a[sp] = acc;
    }
    for (int b = 0; b < d_; ++b) {
      if (b == l) continue;
      const int sb = sub_axis(b, l);
      for (std::size_t sp = 0; sp < n_sub; ++sp) {
        T acc = a[sp];
        int cur = static_cast<int>(sp);
        for (int w = 1;; ++w) {
          cur = sub_.plus(cur, sb);
          if (cur < 0 || static_cast<std::size_t>(cur) >= n_sub) break;
          acc += H[b][w] * a[cur];
        }
        a[sp] = acc;
      }
    }
  }

  const CompressionPlan* plan_;
  int d_;
  int p_;
  IndexTable sub_;
  std::vector<std::vector<int>> sub_of_;
  std::vector<std::vector<int>> lift_start_;
  std::vector<std::vector<int>> lift_pos_;
  std::vector<std::vector<int>> members_;
};

template <class T>
LocalExpansion<T> l2l(const LocalExpansion<T>& e, const Point& new_center, const CompressionPlan& plan,
                      double radius = 0) {
  return Translator(plan).l2l(e, new_center, radius);
}

template <class T>
MultipoleExpansion<T> m2m(const MultipoleExpansion<T>& e, const Point& new_center, const CompressionPlan& plan,
                          double radius = 0) {
  return Translator(plan).m2m(e, new_center, radius);
}

template <class T>
MultipoleExpansion<T> m2m_uncompressed(const MultipoleExpansion<T>& e, const Point& new_center,
                                       const CompressionPlan& plan, double radius = 0) {
  return Translator(plan).m2m_uncompressed(e, new_center, radius);
}

template <class T>
LocalExpansion<T> l2l_uncompressed(const LocalExpansion<T>& e, const Point& new_center, const CompressionPlan& plan,
                                   double radius = 0) {
  return Translator(plan).l2l_uncompressed(e, new_center, radius);
}

/// Default M2L scale: p / r with r = |offset|; the biharmonic kernel uses a
/// half of that.
inline double default_m2l_scale(const Kernel& k, int p, double r) {
  const double t = static_cast<double>(std::max(p, 1)) / r;
  return k.id() == KernelId::biharmonic2d ? t * 0.5 : t;
}

/// Precomputed M2L data for one displacement.
template <class T>
struct M2LTable {
  Point offset;
  double scale = 1;
  std::vector<int> fft_shape;
  std::vector<complex_t<T>> spectrum;
  int plan_order = 0;
  bool compressed = true;
};

/// M2L on one plan, either on the stored indices (compressed) or on all of
/// M(p). Owns the grid layout and transform; holds a pointer to the plan.
template <class T>
class M2LOperator {
 public:
  using C = complex_t<T>;

  explicit M2LOperator(const CompressionPlan& plan, bool compressed = true)
      : plan_(&plan), compressed_(compressed), table2p_(plan.ordering(), 2 * plan.order()) {
    const IndexTable& t = plan.table();
    const int d = plan.dim();
    if (compressed) {
      support_ = plan.j();
      extent_ = plan.fft_extent();
    } else {
      for (std::size_t i = 0; i < t.size(); ++i) support_.push_back(static_cast<int>(i));
      extent_.assign(d, plan.order());
    }
    for (int m : extent_) shape_.push_back(2 * m + 1);
    stride_.assign(d, 1);
    for (int a = d - 2; a >= 0; --a) stride_[a] = stride_[a + 1] * static_cast<std::size_t>(shape_[a + 1]);
    for (int pos : support_) {
      const MultiIndex& m = t[pos];
      std::size_t out = 0, in = 0;
      for (int a = 0; a < d; ++a) {
        out += static_cast<std::size_t>(m[a]) * stride_[a];
        in += static_cast<std::size_t>((shape_[a] - m[a]) % shape_[a]) * stride_[a];
      }
      grid_out_.push_back(out);
      grid_in_.push_back(in);
      degree_.push_back(m.order());
    }
    fft_ = std::make_shared<GridFft<C>>(shape_);
    pairs_.reserve(support_.size() * support_.size());
    for (int i : support_)
      for (int q : support_) pairs_.push_back(table2p_.position(t[i] + t[q]));
  }

  const std::vector<int>& fft_shape() const { return shape_; }
  std::size_t grid_size() const { return fft_->total(); }
  std::size_t support_size() const { return support_.size(); }
  const IndexTable& table2p() const { return table2p_; }

  /// Spectrum of the t^{-|n|}-scaled derivative grid at `offset`.
  M2LTable<T> precompute(const Kernel& k, const Point& offset, double scale = 0) const {
    if (offset.norm() < Kernel::singular_radius) throw SingularPointError("M2L offset is zero");
    if (scale <= 0) scale = default_m2l_scale(k, plan_->order(), offset.norm());
    const CompressionPlan plan2p(plan_->pde(), 2 * plan_->order());
    const auto derivs = derivatives_full<T>(k, offset, plan2p);
    return precompute_from(derivs, offset, scale);
  }

  /// As precompute, from a full derivative table of order 2p (in table2p order).
  M2LTable<T> precompute_from(std::span<const T> derivs2p, const Point& offset, double scale) const {
    if (derivs2p.size() != table2p_.size()) throw std::invalid_argument("derivative table must have order 2p");
    const int d = plan_->dim();
    const int two_p = 2 * plan_->order();
    M2LTable<T> tab{offset, scale, shape_, std::vector<C>(fft_->total()), plan_->order(), compressed_};
    std::vector<double> inv_t(two_p + 1, 1.0);
    for (int n = 1; n <= two_p; ++n) inv_t[n] = inv_t[n - 1] / scale;
    MultiIndex n(d);
    for (std::size_t flat = 0; flat < fft_->total(); ++flat) {
      std::size_t rem = flat;
      for (int a = 0; a < d; ++a) {
        n[a] = static_cast<int>(rem / stride_[a]);
        rem %= stride_[a];
      }
      const int deg = n.order();
      if (deg > two_p) continue;
      tab.spectrum[flat] = C(derivs2p[table2p_.position(n)]) * C(inv_t[deg]);
    }
    fft_->forward(tab.spectrum);
    return tab;
  }

  /// Forward transform of the t^{|q|}-scaled, index-reversed coefficients.
  std::vector<C> forward(std::span<const T> beta, double scale) const {
    if (beta.size() != support_.size()) throw std::invalid_argument("coefficient length does not match M2L layout");
    std::vector<C> grid(fft_->total());
    double tq = 1.0;
    std::vector<double> pw(2 * plan_->order() + 1);
    for (auto& v : pw) {
      v = tq;
      tq *= scale;
    }
    for (std::size_t k = 0; k < support_.size(); ++k) grid[grid_in_[k]] = C(beta[k]) * C(pw[degree_[k]]);
    fft_->forward(grid);
    return grid;
  }

  /// acc += table.spectrum * spectrum, pointwise.
  void accumulate(std::vector<C>& acc, const M2LTable<T>& table, const std::vector<C>& spectrum) const {
    check_table(table);
    if (acc.empty()) acc.assign(fft_->total(), C{});
    if (acc.size() != spectrum.size() || spectrum.size() != table.spectrum.size())
      throw std::invalid_argument("M2L spectrum shape mismatch");
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += table.spectrum[i] * spectrum[i];
  }

  /// Inverse transform and extraction of the output coefficients.
  std::vector<T> backward(std::vector<C> acc, double scale) const {
    if (acc.size() != fft_->total()) throw std::invalid_argument("M2L spectrum shape mismatch");
    fft_->inverse(acc);
    std::vector<double> pw(2 * plan_->order() + 1);
    double tq = 1.0;
    for (auto& v : pw) {
      v = tq;
      tq *= scale;
    }
    std::vector<T> out(support_.size());
    for (std::size_t k = 0; k < support_.size(); ++k)
      out[k] = scalar_traits<T>::from_complex_type(acc[grid_out_[k]] * C(pw[degree_[k]]));
    return out;
  }

  std::vector<T> apply(const M2LTable<T>& table, std::span<const T> beta) const {
    check_table(table);
    std::vector<C> acc;
    accumulate(acc, table, forward(beta, table.scale));
    return backward(std::move(acc), table.scale);
  }

  /// The same correlation by the double sum, from a full derivative table of
  /// order 2p in table2p order.
  std::vector<T> apply_direct(std::span<const T> derivs2p, std::span<const T> beta) const {
    if (derivs2p.size() != table2p_.size()) throw std::invalid_argument("derivative table must have order 2p");
    if (beta.size() != support_.size()) throw std::invalid_argument("coefficient length does not match M2L layout");
    const std::size_t n = support_.size();
    std::vector<T> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      const int* row = pairs_.data() + i * n;
      T acc = derivs2p[row[0]] * beta[0];
      for (std::size_t q = 1; q < n; ++q) acc += derivs2p[row[q]] * beta[q];
      out[i] = acc;
    }
    return out;
  }

 private:
  void check_table(const M2LTable<T>& table) const {
    if (table.fft_shape != shape_ || table.plan_order != plan_->order() || table.compressed != compressed_)
      throw std::invalid_argument("M2L table does not match this operator");
  }

  const CompressionPlan* plan_;
  bool compressed_;
  IndexTable table2p_;
  std::vector<int> support_;
  std::vector<int> extent_;
  std::vector<int> shape_;
  std::vector<std::size_t> stride_;
  std::vector<std::size_t> grid_out_;
  std::vector<std::size_t> grid_in_;
  std::vector<int> degree_;
  std::vector<int> pairs_;  // table2p position of nu(i) + nu(q)
  std::shared_ptr<GridFft<C>> fft_;
};

/// Direct M2L from a full derivative table of order >= 2p at c2 - c1.
template <class T>
LocalExpansion<T> m2l_direct(const MultipoleExpansion<T>& e, const Point& local_center, const CompressionPlan& plan,
                             const IndexTable& table2p, std::span<const T> derivs2p, double radius = 0) {
  if (table2p.order() < 2 * plan.order()) throw std::invalid_argument("derivative table order below 2p");
  if (!(table2p.ordering() == plan.ordering())) throw std::invalid_argument("derivative table uses another ordering");
  if (derivs2p.size() != table2p.size()) throw std::invalid_argument("derivative table length mismatch");
  if (e.beta.size() != plan.stored_size()) throw std::invalid_argument("multipole length does not match plan");
  const IndexTable& t = plan.table();
  const auto& j = plan.j();
  LocalExpansion<T> out{local_center, radius, plan.order(), std::vector<T>(j.size())};
  for (std::size_t i = 0; i < j.size(); ++i) {
    T acc{};
    for (std::size_t q = 0; q < j.size(); ++q) {
      const T term = derivs2p[table2p.position(t[j[i]] + t[j[q]])] * e.beta[q];
      if (q == 0)
        acc = term;
      else
        acc += term;
    }
    out.theta[i] = acc;
  }
  return out;
}

template <class T>
LocalExpansion<T> m2l_direct(const MultipoleExpansion<T>& e, const Point& local_center, const CompressionPlan& plan,
                             const Kernel& k, double radius = 0) {
  const CompressionPlan plan2p(plan.pde(), 2 * plan.order());
  const auto derivs = derivatives_full<T>(k, local_center - e.center, plan2p);
  return m2l_direct(e, local_center, plan, plan2p.table(), std::span<const T>(derivs), radius);
}

template <class T>
M2LTable<T> m2l_precompute(const CompressionPlan& plan, const Kernel& k, const Point& offset, double scale = 0) {
  return M2LOperator<T>(plan).precompute(k, offset, scale);
}

template <class T>
LocalExpansion<T> m2l_apply(const M2LTable<T>& table, const MultipoleExpansion<T>& e, const CompressionPlan& plan,
                            double radius = 0) {
  const M2LOperator<T> op(plan, table.compressed);
  return {e.center + table.offset, radius, plan.order(), op.apply(table, e.beta)};
}

}  // namespace cfmm
