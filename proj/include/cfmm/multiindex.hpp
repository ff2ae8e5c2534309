#pragma once

// Multi-indices and graded monomial orderings.
//
// A graded ordering numbers the multi-indices of dimension d so that the
// total degree never decreases and the numbering is compatible with addition.
// Within a degree block the "slowest" axis is compared first, then the
// remaining axes in descending index order, each ascending. With d = 2 and the
// second axis slowest this gives (0,0) (1,0) (0,1) (2,0) (1,1) (0,2) ...

#include <algorithm>
#include <array>
#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfmm {

inline constexpr int kMaxDim = 6;

class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(int dim) : dim_(dim) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("multi-index dimension out of range");
  }
  MultiIndex(std::initializer_list<int> exps) : MultiIndex(static_cast<int>(exps.size())) {
    int i = 0;
    for (int e : exps) {
      if (e < 0) throw std::invalid_argument("negative multi-index component");
      e_[i++] = e;
    }
  }
  static MultiIndex unit(int dim, int axis, int value = 1) {
    MultiIndex m(dim);
    m.e_[axis] = value;
    return m;
  }

  int dim() const { return dim_; }
  int operator[](int i) const { return e_[i]; }
  int& operator[](int i) { return e_[i]; }

  int order() const {
    int s = 0;
    for (int i = 0; i < dim_; ++i) s += e_[i];
    return s;
  }

  /// Componentwise q <= *this.
  bool dominates(const MultiIndex& q) const {
    require_same_dim(q);
    for (int i = 0; i < dim_; ++i)
      if (q.e_[i] > e_[i]) return false;
    return true;
  }

  double factorial() const {
    double f = 1.0;
    for (int i = 0; i < dim_; ++i)
      for (int k = 2; k <= e_[i]; ++k) f *= k;
    return f;
  }

  friend MultiIndex operator+(MultiIndex a, const MultiIndex& b) {
    a.require_same_dim(b);
    for (int i = 0; i < a.dim_; ++i) a.e_[i] += b.e_[i];
    return a;
  }
  /// Componentwise difference; the caller guarantees b <= a.
  friend MultiIndex operator-(MultiIndex a, const MultiIndex& b) {
    a.require_same_dim(b);
    for (int i = 0; i < a.dim_; ++i) {
      a.e_[i] -= b.e_[i];
      if (a.e_[i] < 0) throw std::invalid_argument("multi-index difference is negative");
    }
    return a;
  }
  friend bool operator==(const MultiIndex& a, const MultiIndex& b) {
    if (a.dim_ != b.dim_) return false;
    for (int i = 0; i < a.dim_; ++i)
      if (a.e_[i] != b.e_[i]) return false;
    return true;
  }

  std::string str() const {
    std::string s = "(";
    for (int i = 0; i < dim_; ++i) {
      if (i) s += ",";
      s += std::to_string(e_[i]);
    }
    return s + ")";
  }
  friend std::ostream& operator<<(std::ostream& os, const MultiIndex& m) { return os << m.str(); }

  void require_same_dim(const MultiIndex& o) const {
    if (o.dim_ != dim_) throw std::invalid_argument("mixed multi-index dimensions");
  }

 private:
  std::array<int, kMaxDim> e_{};
  int dim_ = 0;
};

/// Number of d-dimensional multi-indices of total degree <= p, C(p+d, d).
inline std::int64_t count(int p, int d) {
  if (p < 0) return 0;
  std::int64_t r = 1;
  for (int i = 1; i <= d; ++i) r = r * (p + i) / i;
  return r;
}

inline std::int64_t binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Componentwise product of binomials, zero unless q <= r.
inline std::int64_t multi_binomial(const MultiIndex& r, const MultiIndex& q) {
  r.require_same_dim(q);
  std::int64_t b = 1;
  for (int i = 0; i < r.dim(); ++i) b *= binomial(r[i], q[i]);
  return b;
}

class GradedOrdering {
 public:
  GradedOrdering() = default;
  /// slowest_axis is 0-based.
  GradedOrdering(int dim, int slowest_axis) : dim_(dim), slowest_(slowest_axis) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("ordering dimension out of range");
    if (slowest_axis < 0 || slowest_axis >= dim) throw std::invalid_argument("slowest axis out of range");
    sig_[0] = slowest_axis;
    int k = 1;
    for (int a = dim - 1; a >= 0; --a)
      if (a != slowest_axis) sig_[k++] = a;
  }

  int dim() const { return dim_; }
  int slowest_axis() const { return slowest_; }
  /// Axis compared at position i within a degree block (0 = slowest axis).
  int axis_by_significance(int i) const { return sig_[i]; }

  /// 1-based rank of m.
  std::int64_t rank(const MultiIndex& m) const {
    check(m);
    const int deg = m.order();
    std::int64_t r = count(deg - 1, dim_);
    int remaining = deg;
    for (int t = 0; t + 1 < dim_; ++t) {
      const int a = sig_[t];
      const int free_axes = dim_ - t - 1;
      for (int v = 0; v < m[a]; ++v) r += compositions(remaining - v, free_axes);
      remaining -= m[a];
    }
    return r + 1;
  }

  /// Multi-index with the given 1-based rank.
  MultiIndex unrank(std::int64_t rank) const {
    if (rank < 1) throw std::invalid_argument("rank must be >= 1");
    int deg = 0;
    while (count(deg, dim_) < rank) ++deg;
    std::int64_t pos = rank - 1 - count(deg - 1, dim_);
    MultiIndex m(dim_);
    int remaining = deg;
    for (int t = 0; t + 1 < dim_; ++t) {
      const int a = sig_[t];
      const int free_axes = dim_ - t - 1;
      int v = 0;
      while (true) {
        const std::int64_t block = compositions(remaining - v, free_axes);
        if (pos < block) break;
        pos -= block;
        ++v;
      }
      m[a] = v;
      remaining -= v;
    }
    m[sig_[dim_ - 1]] = remaining;
    return m;
  }

  /// All multi-indices with |m| <= p in increasing rank.
  std::vector<MultiIndex> enumerate(int p) const {
    if (p < 0) throw std::invalid_argument("order must be non-negative");
    std::vector<MultiIndex> out;
    out.reserve(static_cast<std::size_t>(count(p, dim_)));
    for (int deg = 0; deg <= p; ++deg) append_block(deg, out);
    return out;
  }

  friend bool operator==(const GradedOrdering& a, const GradedOrdering& b) {
    return a.dim_ == b.dim_ && a.slowest_ == b.slowest_;
  }

 private:
  // Ways to write s as an ordered sum of k non-negative parts.
  static std::int64_t compositions(int s, int k) {
    if (s < 0) return 0;
    if (k == 0) return s == 0 ? 1 : 0;
    return binomial(s + k - 1, k - 1);
  }

  void check(const MultiIndex& m) const {
    if (m.dim() != dim_) throw std::invalid_argument("multi-index dimension does not match ordering");
  }

  void append_block(int deg, std::vector<MultiIndex>& out) const {
    MultiIndex m(dim_);
    fill(0, deg, m, out);
  }
  void fill(int t, int remaining, MultiIndex& m, std::vector<MultiIndex>& out) const {
    const int a = sig_[t];
    if (t + 1 == dim_) {
      m[a] = remaining;
      out.push_back(m);
      return;
    }
    for (int v = 0; v <= remaining; ++v) {
      m[a] = v;
      fill(t + 1, remaining - v, m, out);
    }
    m[a] = 0;
  }

  int dim_ = 1;
  int slowest_ = 0;
  std::array<int, kMaxDim> sig_{};
};

/// Position lookup tables for M(p) under one ordering. Positions are the
/// 0-based counterpart of ranks and are what coefficient vectors index by.
class IndexTable {
 public:
  IndexTable() = default;
  IndexTable(const GradedOrdering& ordering, int p)
      : ordering_(ordering), order_(p), indices_(ordering.enumerate(p)) {
    const int d = ordering.dim();
    const std::size_t n = indices_.size();
    stride_.assign(d, 1);
    for (int a = 1; a < d; ++a) stride_[a] = stride_[a - 1] * (p + 1);
    dense_.assign(static_cast<std::size_t>(stride_[d - 1]) * (p + 1), -1);
    for (std::size_t i = 0; i < n; ++i) dense_[dense_key(indices_[i])] = static_cast<int>(i);
    plus_.assign(n * d, -1);
    minus_.assign(n * d, -1);
    factorial_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const MultiIndex& m = indices_[i];
      factorial_[i] = m.factorial();
      for (int a = 0; a < d; ++a) {
        if (m.order() < p) {
          MultiIndex up = m;
          ++up[a];
          plus_[i * d + a] = dense_[dense_key(up)];
        }
        if (m[a] > 0) {
          MultiIndex down = m;
          --down[a];
          minus_[i * d + a] = dense_[dense_key(down)];
        }
      }
    }
  }

  const GradedOrdering& ordering() const { return ordering_; }
  int order() const { return order_; }
  int dim() const { return ordering_.dim(); }
  std::size_t size() const { return indices_.size(); }
  const MultiIndex& operator[](std::size_t pos) const { return indices_[pos]; }
  const std::vector<MultiIndex>& indices() const { return indices_; }

  /// Position of m, or -1 if |m| > p.
  int position(const MultiIndex& m) const {
    if (m.order() > order_) return -1;
    return dense_[dense_key(m)];
  }
  /// Position of m + e_axis, or -1 when that leaves M(p).
  int plus(std::size_t pos, int axis) const { return plus_[pos * dim() + axis]; }
  /// Position of m - e_axis, or -1 when m_axis = 0.
  int minus(std::size_t pos, int axis) const { return minus_[pos * dim() + axis]; }
  double factorial(std::size_t pos) const { return factorial_[pos]; }

 private:
  std::size_t dense_key(const MultiIndex& m) const {
    std::size_t k = 0;
    for (int a = 0; a < dim(); ++a) k += static_cast<std::size_t>(m[a]) * stride_[a];
    return k;
  }

  GradedOrdering ordering_;
  int order_ = 0;
  std::vector<MultiIndex> indices_;
  std::vector<std::int64_t> stride_;
  std::vector<int> dense_;
  std::vector<int> plus_;
  std::vector<int> minus_;
  std::vector<double> factorial_;
};

}  // namespace cfmm
