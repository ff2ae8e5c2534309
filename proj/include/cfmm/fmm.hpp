#pragma once

// Uniform quadtree/octree FMM built from the compressed operators.
//
// Leaves sit at level L. M2L runs on levels 2..L between children of
// neighbouring parents that are not neighbours themselves, so every offset is
// in [-3,3]^d \ [-1,1]^d. The near field is the 3^d block of leaves around
// each target leaf.

#include <array>
#include <chrono>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "cfmm/expansions.hpp"
#include "cfmm/geometry.hpp"
#include "cfmm/kernels.hpp"
#include "cfmm/parallel.hpp"
#include "cfmm/plan.hpp"
#include "cfmm/translations.hpp"

namespace cfmm {

struct RootBox {
  Point origin;  // lower corner
  double side = 1;
};

/// Smallest cube containing all points, padded slightly so none lies on the
/// upper faces.
inline RootBox bounding_box(std::span<const Point> a, std::span<const Point> b) {
  if (a.empty() && b.empty()) throw std::invalid_argument("no points to bound");
  const int d = a.empty() ? b[0].dim() : a[0].dim();
  Point lo = Point::filled(d, INFINITY), hi = Point::filled(d, -INFINITY);
  for (auto pts : {a, b})
    for (const Point& x : pts)
      for (int k = 0; k < d; ++k) {
        lo[k] = std::min(lo[k], x[k]);
        hi[k] = std::max(hi[k], x[k]);
      }
  double side = 0;
  for (int k = 0; k < d; ++k) side = std::max(side, hi[k] - lo[k]);
  side = side > 0 ? side * (1 + 1e-12) : 1.0;
  return {lo, side};
}

/// Depth giving about `per_leaf` points per leaf, at least 2.
inline int depth_for(std::size_t n, int dim, double per_leaf = 10) {
  const double levels = std::log(std::max(1.0, static_cast<double>(n) / per_leaf)) / (dim * std::log(2.0));
  return std::max(2, static_cast<int>(std::lround(levels)));
}

class UniformTree {
 public:
  using Coords = std::array<int, kMaxDim>;

  UniformTree(std::vector<Point> sources, std::vector<Point> targets, int depth, RootBox root)
      : sources_(std::move(sources)), targets_(std::move(targets)), depth_(depth), root_(root) {
    if (depth < 2) throw std::invalid_argument("tree depth must be at least 2");
    if (!(root.side > 0)) throw std::invalid_argument("root box side must be positive");
    dim_ = root.origin.dim();
    if (dim_ < 1 || depth * dim_ > 30) throw std::invalid_argument("tree too deep for this dimension");
    bin(sources_, src_start_, src_index_, src_count_);
    bin(targets_, tgt_start_, tgt_index_, tgt_count_);
  }

  int dim() const { return dim_; }
  int depth() const { return depth_; }
  const RootBox& root() const { return root_; }
  const std::vector<Point>& sources() const { return sources_; }
  const std::vector<Point>& targets() const { return targets_; }

  int per_axis(int level) const { return 1 << level; }
  std::size_t box_count(int level) const { return std::size_t{1} << (level * dim_); }
  double box_side(int level) const { return root_.side / per_axis(level); }

  Coords coords(int level, std::size_t box) const {
    Coords c{};
    for (int a = dim_ - 1; a >= 0; --a) {
      c[a] = static_cast<int>(box & (per_axis(level) - 1));
      box >>= level;
    }
    return c;
  }
  std::size_t flat(int level, const Coords& c) const {
    std::size_t f = 0;
    for (int a = 0; a < dim_; ++a) f = (f << level) | static_cast<std::size_t>(c[a]);
    return f;
  }
  bool inside(int level, const Coords& c) const {
    for (int a = 0; a < dim_; ++a)
      if (c[a] < 0 || c[a] >= per_axis(level)) return false;
    return true;
  }
  Point center(int level, std::size_t box) const {
    const Coords c = coords(level, box);
    const double h = box_side(level);
    Point x(dim_);
    for (int a = 0; a < dim_; ++a) x[a] = root_.origin[a] + (c[a] + 0.5) * h;
    return x;
  }
  std::size_t parent(int level, std::size_t box) const {
    Coords c = coords(level, box);
    for (int a = 0; a < dim_; ++a) c[a] /= 2;
    return flat(level - 1, c);
  }
  std::vector<std::size_t> children(int level, std::size_t box) const {
    const Coords c = coords(level, box);
    std::vector<std::size_t> out;
    for (int k = 0; k < (1 << dim_); ++k) {
      Coords ch{};
      for (int a = 0; a < dim_; ++a) ch[a] = 2 * c[a] + ((k >> (dim_ - 1 - a)) & 1);
      out.push_back(flat(level + 1, ch));
    }
    return out;
  }

  /// Sources below a box at any level.
  std::size_t source_count(int level, std::size_t box) const { return src_count_[level][box]; }
  std::size_t target_count(int level, std::size_t box) const { return tgt_count_[level][box]; }

  /// Point indices in a leaf.
  std::span<const int> leaf_sources(std::size_t leaf) const {
    return {src_index_.data() + src_start_[leaf], src_start_[leaf + 1] - src_start_[leaf]};
  }
  std::span<const int> leaf_targets(std::size_t leaf) const {
    return {tgt_index_.data() + tgt_start_[leaf], tgt_start_[leaf + 1] - tgt_start_[leaf]};
  }

  /// Leaf holding x; on a shared face the lower-index box wins.
  std::size_t leaf_of(const Point& x) const {
    if (x.dim() != dim_) throw std::invalid_argument("point dimension does not match tree");
    const double h = box_side(depth_);
    Coords c{};
    for (int a = 0; a < dim_; ++a) {
      const double u = (x[a] - root_.origin[a]) / h;
      if (!(u >= 0) || u > per_axis(depth_) * (1 + 1e-12))
        throw std::out_of_range("point " + x.str() + " lies outside the root box");
      c[a] = std::clamp(static_cast<int>(std::ceil(u)) - 1, 0, per_axis(depth_) - 1);
    }
    return flat(depth_, c);
  }

  /// Same-level boxes in the interaction list of `box`, as (box, offset code).
  template <class F>
  void for_each_interaction(int level, std::size_t box, F&& f) const {
    const Coords c = coords(level, box);
    Coords lo{}, hi{};
    for (int a = 0; a < dim_; ++a) {
      lo[a] = std::max(0, 2 * (c[a] / 2 - 1));
      hi[a] = std::min(per_axis(level) - 1, 2 * (c[a] / 2 + 1) + 1);
    }
    Coords s = lo;
    while (true) {
      bool far = false;
      for (int a = 0; a < dim_; ++a) far = far || std::abs(s[a] - c[a]) > 1;
      if (far) {
        int code = 0;
        for (int a = dim_ - 1; a >= 0; --a) code = code * 7 + (c[a] - s[a] + 3);
        f(flat(level, s), code);
      }
      if (!advance(s, lo, hi)) break;
    }
  }

  template <class F>
  void for_each_neighbor_leaf(std::size_t leaf, F&& f) const {
    const Coords c = coords(depth_, leaf);
    Coords lo{}, hi{};
    for (int a = 0; a < dim_; ++a) {
      lo[a] = std::max(0, c[a] - 1);
      hi[a] = std::min(per_axis(depth_) - 1, c[a] + 1);
    }
    Coords s = lo;
    do f(flat(depth_, s));
    while (advance(s, lo, hi));
  }

  /// Offset c_target - c_source for an interaction code, in box units.
  Point offset_of(int code, double h) const {
    Point o(dim_);
    for (int a = 0; a < dim_; ++a) {
      o[a] = (code % 7 - 3) * h;
      code /= 7;
    }
    return o;
  }

 private:
  // Odometer step over the box [lo, hi]; false after the last entry.
  bool advance(Coords& s, const Coords& lo, const Coords& hi) const {
    for (int a = dim_ - 1; a >= 0; --a) {
      if (++s[a] <= hi[a]) return true;
      s[a] = lo[a];
    }
    return false;
  }

  void bin(const std::vector<Point>& pts, std::vector<std::size_t>& start, std::vector<int>& index,
           std::vector<std::vector<std::size_t>>& counts) const {
    const std::size_t leaves = box_count(depth_);
    std::vector<std::size_t> leaf(pts.size());
    start.assign(leaves + 1, 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      leaf[i] = leaf_of(pts[i]);
      ++start[leaf[i] + 1];
    }
    for (std::size_t b = 0; b < leaves; ++b) start[b + 1] += start[b];
    index.assign(pts.size(), 0);
    std::vector<std::size_t> fill(start.begin(), start.end() - 1);
    for (std::size_t i = 0; i < pts.size(); ++i) index[fill[leaf[i]]++] = static_cast<int>(i);
    counts.assign(depth_ + 1, {});
    counts[depth_].resize(leaves);
    for (std::size_t b = 0; b < leaves; ++b) counts[depth_][b] = start[b + 1] - start[b];
    for (int l = depth_ - 1; l >= 0; --l) {
      counts[l].assign(box_count(l), 0);
      for (std::size_t b = 0; b < box_count(l + 1); ++b) counts[l][parent(l + 1, b)] += counts[l + 1][b];
    }
  }

  std::vector<Point> sources_, targets_;
  int depth_;
  RootBox root_;
  int dim_ = 0;
  std::vector<std::size_t> src_start_, tgt_start_;
  std::vector<int> src_index_, tgt_index_;
  std::vector<std::vector<std::size_t>> src_count_, tgt_count_;
};

inline UniformTree build_tree(std::vector<Point> sources, std::vector<Point> targets, int depth, RootBox root) {
  return UniformTree(std::move(sources), std::move(targets), depth, root);
}

enum class M2LMode { direct, fft };

inline M2LMode m2l_mode_from_name(const std::string& s) {
  if (s == "direct") return M2LMode::direct;
  if (s == "fft") return M2LMode::fft;
  throw std::invalid_argument("unknown M2L mode '" + s + "' (expected direct or fft)");
}

inline const char* m2l_mode_name(M2LMode m) { return m == M2LMode::direct ? "direct" : "fft"; }

struct FmmStats {
  std::size_t m2l_interactions = 0;
  std::size_t near_pairs = 0;
  double precompute_ms = 0;
};

namespace detail {

template <class T>
T kernel_value(const Kernel& k, const Point& r) {
  return make_scalar<T>(k.eval(r));
}

}  // namespace detail

/// Direct O(NM) sums; coincident source/target pairs are skipped.
template <class T>
std::vector<T> direct_reference(std::span<const Point> sources, std::span<const T> weights,
                                std::span<const Point> targets, const Kernel& k) {
  if (sources.size() != weights.size()) throw std::invalid_argument("source points and weights differ in length");
  detail::require_scalar_for<T>(k);
  std::vector<T> out(targets.size());
  parallel_for(targets.size(), [&](std::size_t t) {
    T acc{};
    for (std::size_t s = 0; s < sources.size(); ++s) {
      const Point r = targets[t] - sources[s];
      if (r.norm() < Kernel::singular_radius) continue;
      acc += detail::kernel_value<T>(k, r) * weights[s];
    }
    out[t] = acc;
  });
  return out;
}

/// Potentials at the tree targets. The M2L scale on level l is
/// scale_factor * p / (2 h_l); a factor of 0 selects the kernel default.
template <class T>
std::vector<T> evaluate_fmm(const UniformTree& tree, const Kernel& k, const CompressionPlan& plan,
                            std::span<const T> weights, M2LMode mode, FmmStats* stats = nullptr,
                            double scale_factor = 0) {
  if (!(plan.pde() == k.pde())) throw std::invalid_argument("plan was built for a different PDE than the kernel");
  if (tree.dim() != k.dim()) throw std::invalid_argument("tree dimension does not match kernel");
  if (weights.size() != tree.sources().size()) throw std::invalid_argument("one weight per source required");
  if (scale_factor < 0) throw std::invalid_argument("M2L scale factor must be non-negative");
  detail::require_scalar_for<T>(k);
  using C = complex_t<T>;
  const int L = tree.depth();
  const int d = tree.dim();
  const int p = plan.order();
  const std::size_t nj = plan.stored_size();
  const Translator tr(plan);
  const M2LOperator<T> op(plan);
  FmmStats local_stats;

  // Upward pass.
  std::vector<std::vector<std::vector<T>>> mpole(L + 1);
  mpole[L].resize(tree.box_count(L));
  parallel_for(tree.box_count(L), [&](std::size_t b) {
    const auto idx = tree.leaf_sources(b);
    if (idx.empty()) return;
    Sources<T> src;
    for (int i : idx) {
      src.points.push_back(tree.sources()[i]);
      src.weights.push_back(weights[i]);
    }
    mpole[L][b] = p2m(src, tree.center(L, b), 0.0, plan).beta;
  });
  for (int l = L - 1; l >= 2; --l) {
    mpole[l].resize(tree.box_count(l));
    parallel_for(tree.box_count(l), [&](std::size_t b) {
      if (tree.source_count(l, b) == 0) return;
      std::vector<T> acc(nj);
      const Point c = tree.center(l, b);
      for (std::size_t ch : tree.children(l, b)) {
        if (mpole[l + 1][ch].empty()) continue;
        const MultipoleExpansion<T> e{tree.center(l + 1, ch), 0.0, p, mpole[l + 1][ch]};
        const auto moved = tr.m2m(e, c, 0.0);
        for (std::size_t i = 0; i < nj; ++i) acc[i] += moved.beta[i];
      }
      mpole[l][b] = std::move(acc);
    });
  }

  // Interaction lists and downward pass.
  std::vector<std::vector<T>> local_prev, local_cur;
  for (int l = 2; l <= L; ++l) {
    const double h = tree.box_side(l);
    const double scale = scale_factor > 0 ? scale_factor * std::max(p, 1) / (2 * h) : default_m2l_scale(k, p, 2 * h);
    const std::size_t nbox = tree.box_count(l);
    local_cur.assign(nbox, {});

    // Per-offset tables, outside the flop tally.
    const auto t0 = std::chrono::steady_clock::now();
    const int ncode = static_cast<int>(std::pow(7, d));
    std::vector<M2LTable<T>> tables(mode == M2LMode::fft ? ncode : 0);
    std::vector<std::vector<T>> derivs(mode == M2LMode::direct ? ncode : 0);
    {
      const FlopCounter saved = thread_flops();
      const CompressionPlan plan2p(plan.pde(), 2 * p);
      std::vector<int> codes;
      for (int code = 0; code < ncode; ++code) {
        int rest = code;
        bool far = false;
        for (int a = 0; a < d; ++a) {
          far = far || std::abs(rest % 7 - 3) > 1;
          rest /= 7;
        }
        if (far) codes.push_back(code);
      }
      parallel_for(codes.size(), [&](std::size_t i) {
        const int code = codes[i];
        const Point off = tree.offset_of(code, h);
        auto dv = derivatives_full<T>(k, off, plan2p);
        if (mode == M2LMode::fft)
          tables[code] = op.precompute_from(dv, off, scale);
        else
          derivs[code] = std::move(dv);
      });
      thread_flops() = saved;
    }
    local_stats.precompute_ms +=
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    std::vector<std::vector<C>> spectra;
    if (mode == M2LMode::fft) {
      spectra.resize(nbox);
      parallel_for(nbox, [&](std::size_t s) {
        if (!mpole[l][s].empty()) spectra[s] = op.forward(mpole[l][s], scale);
      });
    }
    std::vector<std::size_t> counted(nbox, 0);
    parallel_for(nbox, [&](std::size_t b) {
      if (tree.target_count(l, b) == 0) return;
      std::vector<T> theta(nj);
      if (l > 2 && !local_prev[tree.parent(l, b)].empty()) {
        const std::size_t par = tree.parent(l, b);
        const LocalExpansion<T> e{tree.center(l - 1, par), 0.0, p, local_prev[par]};
        theta = tr.l2l(e, tree.center(l, b), 0.0).theta;
      }
      std::vector<C> acc;
      bool any = false;
      tree.for_each_interaction(l, b, [&](std::size_t s, int code) {
        if (mpole[l][s].empty()) return;
        any = true;
        ++counted[b];
        if (mode == M2LMode::fft) {
          op.accumulate(acc, tables[code], spectra[s]);
        } else {
          const auto got = op.apply_direct(derivs[code], mpole[l][s]);
          for (std::size_t i = 0; i < nj; ++i) theta[i] += got[i];
        }
      });
      if (any && mode == M2LMode::fft) {
        const auto got = op.backward(std::move(acc), scale);
        for (std::size_t i = 0; i < nj; ++i) theta[i] += got[i];
      }
      local_cur[b] = std::move(theta);
    });
    for (std::size_t c : counted) local_stats.m2l_interactions += c;
    local_prev.swap(local_cur);
  }

  // Leaves: L2P plus near field.
  std::vector<T> out(tree.targets().size());
  std::vector<std::size_t> pairs(tree.box_count(L), 0);
  parallel_for(tree.box_count(L), [&](std::size_t b) {
    const auto tgt = tree.leaf_targets(b);
    if (tgt.empty()) return;
    const Point c = tree.center(L, b);
    std::vector<T> gamma;
    if (!local_prev[b].empty()) gamma = local_monomial_coefficients(LocalExpansion<T>{c, 0.0, p, local_prev[b]}, plan);
    for (int t : tgt) {
      const Point& x = tree.targets()[t];
      T acc{};
      if (!gamma.empty()) acc = eval_monomials<T>(gamma, c, x, plan.table());
      tree.for_each_neighbor_leaf(b, [&](std::size_t nb) {
        for (int s : tree.leaf_sources(nb)) {
          const Point r = x - tree.sources()[s];
          if (r.norm() < Kernel::singular_radius) continue;
          acc += detail::kernel_value<T>(k, r) * weights[s];
          ++pairs[b];
        }
      });
      out[t] = acc;
    }
  });
  for (std::size_t n : pairs) local_stats.near_pairs += n;
  if (stats) *stats = local_stats;
  return out;
}

}  // namespace cfmm
