#pragma once

// Compression plans: which Taylor coefficients of a PDE solution are stored
// and how the remaining ones are recovered from them.
//
// Row i of P (one per n = nu(i) with |n| <= p - c) holds a_xi at column
// nu^{-1}(n + xi). Every derivative table of a solution lies in the null
// space of P. With t the PDE term of highest rank, the last nonzero column of
// row i is h(i) = nu^{-1}(n + t); those columns (jbar) are eliminated, the
// rest (j) are stored, and forward substitution over the rows rebuilds the
// full vector in O(N(p)) operations.

#include <algorithm>
#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfmm/multiindex.hpp"
#include "cfmm/pde.hpp"
#include "cfmm/scalar.hpp"

namespace cfmm {

struct PEntry {
  int column;  // 0-based position in M(p)
  std::complex<double> value;
};
using PRows = std::vector<std::vector<PEntry>>;

/// Ordering used for a PDE: the slowest axis is the last k with a_{c e_k} != 0.
/// PDEs without such a term fall back to the last axis.
inline GradedOrdering ordering_for(const PdeOperator& pde, bool* property1 = nullptr) {
  const int d = pde.dim();
  const int c = pde.order();
  for (int k = d - 1; k >= 0; --k) {
    if (pde.coefficient(MultiIndex::unit(d, k, c)) != 0.0) {
      if (property1) *property1 = true;
      return GradedOrdering(d, k);
    }
  }
  if (property1) *property1 = false;
  return GradedOrdering(d, d - 1);
}

/// Rows of P for expansion order p, columns as 0-based positions. Below the
/// PDE order there are no constraints and P is empty.
inline PRows build_p_matrix(const PdeOperator& pde, int p, const IndexTable& table) {
  if (p < 0) throw std::invalid_argument("negative order");
  if (table.dim() != pde.dim()) throw std::invalid_argument("PDE and ordering dimensions differ");
  if (table.order() < p) throw std::invalid_argument("index table too small for order");
  const std::size_t rows = p < pde.order() ? 0 : static_cast<std::size_t>(count(p - pde.order(), pde.dim()));
  PRows out(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    for (const auto& term : pde.terms())
      out[i].push_back({table.position(table[i] + term.index), term.coefficient});
    std::sort(out[i].begin(), out[i].end(),
              [](const PEntry& a, const PEntry& b) { return a.column < b.column; });
  }
  return out;
}

inline PRows build_p_matrix(const PdeOperator& pde, int p, const GradedOrdering& ordering) {
  return build_p_matrix(pde, p, IndexTable(ordering, p));
}

struct PivotSets {
  std::vector<int> h;     // per row, 0-based column of the last nonzero
  std::vector<int> jbar;  // eliminated positions, ascending
  std::vector<int> j;     // stored positions, ascending
};

inline PivotSets pivot_sets(const PRows& rows, std::size_t n_columns) {
  PivotSets s;
  std::vector<char> eliminated(n_columns, 0);
  for (const auto& row : rows) {
    if (row.empty()) throw std::invalid_argument("empty row in P");
    const int last = std::max_element(row.begin(), row.end(), [](const PEntry& a, const PEntry& b) {
                       return a.column < b.column;
                     })->column;
    s.h.push_back(last);
    eliminated[last] = 1;
  }
  for (std::size_t c = 0; c < n_columns; ++c) (eliminated[c] ? s.jbar : s.j).push_back(static_cast<int>(c));
  return s;
}

/// S_{axis,level}: multi-indices whose component `axis` equals `level`.
struct Slice {
  int axis;  // 0-based
  int level;
  friend bool operator==(const Slice&, const Slice&) = default;
};

class CompressionPlan {
 public:
  CompressionPlan() = default;
  CompressionPlan(const PdeOperator& pde, int p) : pde_(pde), p_(p) {
    if (p < 0) throw std::invalid_argument("negative order");
    ordering_ = ordering_for(pde, &property1_);
    table_ = IndexTable(ordering_, p);
    rows_ = build_p_matrix(pde, p, table_);
    pivots_ = pivot_sets(rows_, table_.size());

    // The term of highest rank is the pivot of every row.
    const PdeTerm* lead = &pde.terms().front();
    for (const auto& t : pde.terms())
      if (ordering_.rank(t.index) > ordering_.rank(lead->index)) lead = &t;
    t_lead_ = lead->index;
    const std::complex<double> a_t = lead->coefficient;

    row_begin_.push_back(0);
    for (const auto& row : rows_) {
      for (const auto& e : row)
        if (e.column != row.back().column) program_.push_back({e.column, -e.value / a_t});
      row_begin_.push_back(static_cast<int>(program_.size()));
    }

    slot_.assign(table_.size(), -1);
    for (std::size_t k = 0; k < pivots_.j.size(); ++k) slot_[pivots_.j[k]] = static_cast<int>(k);

    const int d = pde.dim();
    for (int s = 0; s < d; ++s) {
      const int axis = ordering_.axis_by_significance(s);
      for (int lvl = 0; lvl < std::min(t_lead_[axis], p + 1); ++lvl) slices_.push_back({axis, lvl});
    }
    slice_of_.assign(pivots_.j.size(), -1);
    for (std::size_t k = 0; k < pivots_.j.size(); ++k) {
      const MultiIndex& m = table_[pivots_.j[k]];
      for (std::size_t s = 0; s < slices_.size(); ++s)
        if (m[slices_[s].axis] == slices_[s].level) {
          slice_of_[k] = static_cast<int>(s);
          break;
        }
      if (slice_of_[k] < 0) throw std::logic_error("stored index not covered by a slice");
    }

    fft_extent_.assign(d, 0);
    for (int pos : pivots_.j)
      for (int a = 0; a < d; ++a) fft_extent_[a] = std::max(fft_extent_[a], table_[pos][a]);
  }

  const PdeOperator& pde() const { return pde_; }
  int order() const { return p_; }
  int dim() const { return pde_.dim(); }
  const GradedOrdering& ordering() const { return ordering_; }
  const IndexTable& table() const { return table_; }
  std::size_t full_size() const { return table_.size(); }
  std::size_t stored_size() const { return pivots_.j.size(); }

  const PRows& rows() const { return rows_; }
  const std::vector<int>& h() const { return pivots_.h; }
  const std::vector<int>& jbar() const { return pivots_.jbar; }
  const std::vector<int>& j() const { return pivots_.j; }
  const MultiIndex& t_lead() const { return t_lead_; }
  bool has_property1() const { return property1_; }
  const std::vector<Slice>& slices() const { return slices_; }
  /// Slice owning stored entry k (first covering slice in listed order).
  int slice_of(std::size_t k) const { return slice_of_[k]; }
  /// Maximum exponent per axis over stored indices.
  const std::vector<int>& fft_extent() const { return fft_extent_; }
  std::vector<int> fft_shape() const {
    std::vector<int> s;
    for (int m : fft_extent_) s.push_back(2 * m + 1);
    return s;
  }
  /// Index into the stored vector for full position pos, or -1 if eliminated.
  int stored_slot(std::size_t pos) const { return slot_[pos]; }
  const MultiIndex& stored_index(std::size_t k) const { return table_[pivots_.j[k]]; }

  struct Step {
    int source;  // full position
    std::complex<double> r;  // -a_xi / a_t
  };
  std::span<const Step> row_program(std::size_t i) const {
    return {program_.data() + row_begin_[i], program_.data() + row_begin_[i + 1]};
  }

  friend bool operator==(const CompressionPlan& a, const CompressionPlan& b) {
    return a.p_ == b.p_ && a.pde_ == b.pde_;
  }

 private:
  PdeOperator pde_;
  int p_ = 0;
  GradedOrdering ordering_;
  IndexTable table_;
  bool property1_ = false;
  PRows rows_;
  PivotSets pivots_;
  MultiIndex t_lead_;
  std::vector<Step> program_;
  std::vector<int> row_begin_;
  std::vector<int> slot_;
  std::vector<Slice> slices_;
  std::vector<int> slice_of_;
  std::vector<int> fft_extent_;
};

inline CompressionPlan build_plan(const PdeOperator& pde, int p) { return CompressionPlan(pde, p); }

namespace detail {
template <class T>
T coefficient_as(const std::complex<double>& c) {
  if constexpr (scalar_traits<T>::is_complex) {
    return T(c);
  } else {
    return T(c.real());
  }
}

template <class T>
void require_real_ok(const CompressionPlan& plan) {
  if constexpr (!scalar_traits<T>::is_complex) {
    if (!plan.pde().real_coefficients())
      throw std::invalid_argument("complex PDE coefficients need a complex scalar");
  }
}
}  // namespace detail

/// Full coefficient vector from the stored entries (M * stored).
template <class T>
std::vector<T> decompress(const CompressionPlan& plan, std::span<const T> stored) {
  if (stored.size() != plan.stored_size()) throw std::invalid_argument("stored vector length mismatch");
  detail::require_real_ok<T>(plan);
  std::vector<T> full(plan.full_size());
  const auto& j = plan.j();
  for (std::size_t k = 0; k < j.size(); ++k) full[j[k]] = stored[k];
  const auto& h = plan.h();
  for (std::size_t i = 0; i < h.size(); ++i) {
    T acc{};
    bool first = true;
    for (const auto& step : plan.row_program(i)) {
      T term = detail::coefficient_as<T>(step.r) * full[step.source];
      if (first) {
        acc = term;
        first = false;
      } else {
        acc += term;
      }
    }
    full[h[i]] = acc;
  }
  return full;
}

template <class T>
std::vector<T> decompress(const CompressionPlan& plan, const std::vector<T>& stored) {
  return decompress(plan, std::span<const T>(stored));
}

/// M^T * full, the adjoint of decompress.
template <class T>
std::vector<T> decompress_transpose(const CompressionPlan& plan, std::span<const T> full) {
  if (full.size() != plan.full_size()) throw std::invalid_argument("full vector length mismatch");
  detail::require_real_ok<T>(plan);
  std::vector<T> w(full.begin(), full.end());
  const auto& h = plan.h();
  for (std::size_t i = h.size(); i-- > 0;) {
    const T src = w[h[i]];
    for (const auto& step : plan.row_program(i)) w[step.source] += detail::coefficient_as<T>(step.r) * src;
  }
  std::vector<T> out(plan.stored_size());
  const auto& j = plan.j();
  for (std::size_t k = 0; k < j.size(); ++k) out[k] = w[j[k]];
  return out;
}

template <class T>
std::vector<T> decompress_transpose(const CompressionPlan& plan, const std::vector<T>& full) {
  return decompress_transpose(plan, std::span<const T>(full));
}

/// Restriction of a full vector to the stored positions.
template <class T>
std::vector<T> restrict_to_stored(const CompressionPlan& plan, std::span<const T> full) {
  if (full.size() != plan.full_size()) throw std::invalid_argument("full vector length mismatch");
  std::vector<T> out;
  out.reserve(plan.stored_size());
  for (int pos : plan.j()) out.push_back(full[pos]);
  return out;
}

template <class T>
std::vector<T> restrict_to_stored(const CompressionPlan& plan, const std::vector<T>& full) {
  return restrict_to_stored(plan, std::span<const T>(full));
}

/// ASCII picture of stored (#) and eliminated (.) indices for d = 2, with
/// the second exponent growing upward.
inline std::string footprint(const CompressionPlan& plan) {
  if (plan.dim() != 2) throw std::invalid_argument("footprint is only drawn for d = 2");
  const int p = plan.order();
  std::string out;
  for (int m2 = p; m2 >= 0; --m2) {
    for (int m1 = 0; m1 + m2 <= p; ++m1) {
      const int pos = plan.table().position(MultiIndex{m1, m2});
      out += plan.stored_slot(pos) >= 0 ? '#' : '.';
    }
    out += '\n';
  }
  return out;
}

}  // namespace cfmm
