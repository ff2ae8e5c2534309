#pragma once

// Experiment drivers behind the CLI: M2M accuracy sweeps in R and kappa,
// operation counts, plan inspection and FMM benchmarks.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cfmm/expansions.hpp"
#include "cfmm/fmm.hpp"
#include "cfmm/kernels.hpp"
#include "cfmm/parallel.hpp"
#include "cfmm/plan.hpp"
#include "cfmm/rng.hpp"
#include "cfmm/scalar.hpp"
#include "cfmm/stats.hpp"
#include "cfmm/translations.hpp"

namespace cfmm {

struct KernelSpec {
  std::string name = "laplace2d";
  double kappa = 0;
  Kernel make() const { return Kernel::from_name(name, kappa); }
};

/// Calls f.template operator()<T>() with the plain scalar for the kernel.
template <class F>
decltype(auto) dispatch_scalar(const Kernel& k, F&& f) {
  if (k.complex_valued()) return f.template operator()<std::complex<double>>();
  return f.template operator()<double>();
}

/// As dispatch_scalar, with the counting scalar.
template <class F>
decltype(auto) dispatch_counted(const Kernel& k, F&& f) {
  if (k.complex_valued()) return f.template operator()<Counted<std::complex<double>>>();
  return f.template operator()<Counted<double>>();
}

/// Equally spaced points from lo to hi (inclusive), n per axis.
inline std::vector<Point> grid_points(int d, int n, double lo, double hi) {
  if (n < 2) throw std::invalid_argument("grid needs at least 2 points per axis");
  std::vector<Point> out;
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(n);
  out.reserve(total);
  for (std::size_t f = 0; f < total; ++f) {
    Point x(d);
    std::size_t rest = f;
    for (int a = d - 1; a >= 0; --a) {
      x[a] = lo + (hi - lo) * static_cast<double>(rest % n) / (n - 1);
      rest /= n;
    }
    out.push_back(x);
  }
  return out;
}

// ---------------------------------------------------------------------------
// M2M accuracy

struct M2mAccuracyConfig {
  KernelSpec kernel;
  std::vector<int> orders{2, 4, 6, 8, 10, 12};
  std::vector<double> radii;  // default 2^-10 .. 2^-2
  std::uint64_t seed = 1;
  int grid = 50;
};

struct M2mAccuracyRow {
  std::string kernel;
  int p;
  double R;
  double eps_rel;
};

struct M2mKappaConfig {
  KernelSpec kernel{"helmholtz2d", 1.0};
  std::vector<int> orders{2, 4, 6, 8, 10, 12};
  std::vector<double> kappas;  // default 12 log-spaced values on [1, 50]
  double R = 1e-2;
  std::uint64_t seed = 1;
  int grid = 50;
};

struct M2mKappaRow {
  std::string kernel;
  int p;
  double kappa;
  double eps_rel;
  double eps_trunc;
};

inline std::vector<double> default_radii() {
  std::vector<double> r;
  for (int e = -10; e <= -2; ++e) r.push_back(std::ldexp(1.0, e));
  return r;
}

inline std::vector<double> log_spaced(double lo, double hi, int n) {
  if (n < 1 || !(lo > 0) || !(hi >= lo)) throw std::invalid_argument("bad log-spaced range");
  std::vector<double> v;
  for (int i = 0; i < n; ++i)
    v.push_back(n == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return v;
}

namespace detail {

/// The source/target arrangement for M2M accuracy runs. Sources fill a grid of
/// side 2R with its lower corner at the origin, i.e. centred at (R,...,R).
struct M2mGeometry {
  int dim;
  std::vector<Point> unit_sources;  // grid on [0, 2]^d, scaled by R
  std::vector<double> strengths;
  std::vector<Point> targets;       // grid of side 1 centred at (1,...,1)
};

inline M2mGeometry m2m_geometry(int d, int grid, std::uint64_t seed) {
  M2mGeometry g{d, grid_points(d, grid, 0.0, 2.0), {}, grid_points(d, grid, 0.5, 1.5)};
  Rng rng(seed);
  g.strengths.reserve(g.unit_sources.size());
  for (std::size_t i = 0; i < g.unit_sources.size(); ++i) g.strengths.push_back(rng.uniform_open());
  return g;
}

template <class T>
Sources<T> scaled_sources(const M2mGeometry& g, double R) {
  Sources<T> s;
  s.points.reserve(g.unit_sources.size());
  for (const Point& u : g.unit_sources) s.points.push_back(R * u);
  for (double w : g.strengths) s.weights.push_back(T(w));
  return s;
}

template <class T>
double l2_ratio(const std::vector<T>& num, const std::vector<T>& den) {
  double a = 0, b = 0;
  for (std::size_t i = 0; i < num.size(); ++i) {
    a += std::norm(std::complex<double>(raw_value(num[i])));
    b += std::norm(std::complex<double>(raw_value(den[i])));
  }
  return std::sqrt(a / b);
}

/// Evaluates the compressed and uncompressed translated expansions of one
/// order at every target, for several source scalings. Returns, per radius,
/// the potentials (compressed, uncompressed).
template <class T>
std::vector<std::pair<std::vector<T>, std::vector<T>>> translated_potentials(const Kernel& k, int p,
                                                                              const M2mGeometry& g,
                                                                              const std::vector<double>& radii) {
  const int d = g.dim;
  const CompressionPlan plan(k.pde(), p);
  const Translator tr(plan);
  const Point c2 = Point::filled(d, 0.0);
  std::vector<std::vector<T>> psi(radii.size()), rho(radii.size());
  parallel_for(radii.size(), [&](std::size_t r) {
    const double R = radii[r];
    const Sources<T> src = scaled_sources<T>(g, R);
    const Point c1 = Point::filled(d, R);
    const double R1 = std::sqrt(d) * R, R2 = 2 * std::sqrt(d) * R;
    psi[r] = tr.m2m(p2m(src, c1, R1, plan), c2, R2).beta;
    rho[r] = tr.m2m_uncompressed(p2m_uncompressed(src, c1, R1, plan), c2, R2).beta;
  });
  std::vector<std::pair<std::vector<T>, std::vector<T>>> out(
      radii.size(), {std::vector<T>(g.targets.size()), std::vector<T>(g.targets.size())});
  parallel_for(g.targets.size(), [&](std::size_t t) {
    const Point& x = g.targets[t];
    const auto dj = derivatives_compressed<T>(k, x - c2, plan);
    const auto df = derivatives_unreduced<T>(k, x - c2, plan.table());
    for (std::size_t r = 0; r < radii.size(); ++r) {
      out[r].first[t] = detail::dot<T>(dj, psi[r]);
      out[r].second[t] = detail::dot<T>(df, rho[r]);
    }
  });
  return out;
}

}  // namespace detail

inline std::vector<M2mAccuracyRow> run_m2m_accuracy(const M2mAccuracyConfig& cfg) {
  const Kernel k = cfg.kernel.make();
  const auto radii = cfg.radii.empty() ? default_radii() : cfg.radii;
  if (cfg.orders.empty()) throw std::invalid_argument("orders must not be empty");
  const auto g = detail::m2m_geometry(k.dim(), cfg.grid, cfg.seed);
  std::vector<M2mAccuracyRow> rows;
  for (int p : cfg.orders) {
    dispatch_scalar(k, [&]<class T>() {
      const auto pots = detail::translated_potentials<T>(k, p, g, radii);
      for (std::size_t r = 0; r < radii.size(); ++r) {
        std::vector<T> diff(pots[r].first.size());
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = pots[r].first[i] - pots[r].second[i];
        rows.push_back({k.name(), p, radii[r], detail::l2_ratio(diff, pots[r].second)});
      }
    });
  }
  return rows;
}

inline std::vector<M2mKappaRow> run_m2m_kappa(const M2mKappaConfig& cfg) {
  const Kernel k0 = cfg.kernel.make();
  if (!k0.is_helmholtz()) throw std::invalid_argument("the kappa sweep needs a Helmholtz kernel");
  if (cfg.orders.empty()) throw std::invalid_argument("orders must not be empty");
  const auto kappas = cfg.kappas.empty() ? log_spaced(1.0, 50.0, 12) : cfg.kappas;
  const auto g = detail::m2m_geometry(k0.dim(), cfg.grid, cfg.seed);
  using T = std::complex<double>;
  const Sources<T> src = detail::scaled_sources<T>(g, cfg.R);
  std::vector<M2mKappaRow> rows;
  for (double kappa : kappas) {
    const Kernel k(k0.id(), kappa);
    const auto direct = direct_reference<T>(src.points, src.weights, g.targets, k);
    for (int p : cfg.orders) {
      const auto pots = detail::translated_potentials<T>(k, p, g, {cfg.R})[0];
      std::vector<T> diff(direct.size()), trunc(direct.size());
      for (std::size_t i = 0; i < direct.size(); ++i) {
        diff[i] = pots.first[i] - pots.second[i];
        trunc[i] = pots.second[i] - direct[i];
      }
      rows.push_back({k.name(), p, kappa, detail::l2_ratio(diff, pots.second), detail::l2_ratio(trunc, direct)});
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Operation counts

inline const std::vector<std::string>& operator_names() {
  static const std::vector<std::string> names{"P2M", "P2L", "M2M", "M2L", "L2L", "M2P", "L2P"};
  return names;
}

struct OpcountConfig {
  KernelSpec kernel;
  std::vector<int> orders{8, 12, 16, 20, 24, 28, 32};
  std::vector<std::string> ops = operator_names();
};

struct OpcountRow {
  std::string kernel;
  std::string op;
  int p;
  std::string representation;  // full, compressed, compressed+fft
  std::uint64_t flops;
};

/// M2L interactions sharing one transform per box: 27 in 2D, 189 in 3D.
inline double m2l_list_size(int d) { return d == 2 ? 27.0 : d == 3 ? 189.0 : std::pow(6, d) - std::pow(3, d); }

namespace detail {

template <class F>
std::uint64_t count_flops(F&& f) {
  FlopScope scope;
  f();
  return scope.elapsed().total();
}

template <class T>
std::uint64_t m2l_fft_flops(const M2LOperator<T>& op, const M2LTable<T>& tab, const std::vector<T>& coeffs, int d) {
  std::vector<complex_t<T>> spec, acc;
  const double fwd = static_cast<double>(count_flops([&] { spec = op.forward(coeffs, tab.scale); }));
  const double mul = static_cast<double>(count_flops([&] { op.accumulate(acc, tab, spec); }));
  const double inv = static_cast<double>(count_flops([&] { op.backward(acc, tab.scale); }));
  return static_cast<std::uint64_t>(std::llround((fwd + inv) / m2l_list_size(d) + mul));
}

/// Counted work of one operator at order p in each applicable representation.
template <class T>
std::vector<std::pair<std::string, std::uint64_t>> opcount_one(const Kernel& k, const std::string& op, int p) {
  const int d = k.dim();
  const CompressionPlan plan(k.pde(), p);
  const Translator tr(plan);
  const Point c1 = Point::filled(d, 0.0);
  Point c2 = c1;
  c2[0] = 3.0;
  Point y = Point::filled(d, 0.1), x = c2;
  y[0] = 0.15;
  for (int a = 0; a < d; ++a) x[a] += 0.05 * (a + 1);
  const Sources<T> src{{y}, {T(1.0)}};
  const std::vector<T> stored(plan.stored_size(), T(0.5)), full(plan.full_size(), T(0.5));
  std::vector<std::pair<std::string, std::uint64_t>> out;
  if (op == "P2M") {
    out.push_back({"full", count_flops([&] { p2m_uncompressed(src, c1, 0.5, plan); })});
    out.push_back({"compressed", count_flops([&] { p2m(src, c1, 0.5, plan); })});
  } else if (op == "P2L") {
    out.push_back({"full", count_flops([&] { p2l_uncompressed(src, c2, 0.5, plan, k); })});
    out.push_back({"compressed", count_flops([&] { p2l(src, c2, 0.5, plan, k); })});
  } else if (op == "M2M") {
    const Point h = Point::filled(d, 0.25);
    out.push_back({"full", count_flops([&] { tr.m2m_uncompressed(MultipoleExpansion<T>{c1, 0.5, p, full}, h, 1.0); })});
    out.push_back({"compressed", count_flops([&] { tr.m2m(MultipoleExpansion<T>{c1, 0.5, p, stored}, h, 1.0); })});
  } else if (op == "L2L") {
    const Point h = c2 + Point::filled(d, 0.25);
    out.push_back({"full", count_flops([&] { tr.l2l_uncompressed(LocalExpansion<T>{c2, 1.0, p, full}, h, 0.5); })});
    out.push_back({"compressed", count_flops([&] { tr.l2l(LocalExpansion<T>{c2, 1.0, p, stored}, h, 0.5); })});
  } else if (op == "M2L") {
    // Derivative tables and kernel spectra are per-tree precomputation.
    const FlopCounter saved = thread_flops();
    const M2LOperator<T> full_op(plan, false), op_c(plan, true);
    const CompressionPlan plan2p(plan.pde(), 2 * p);
    const auto derivs = derivatives_full<T>(k, c2 - c1, plan2p);
    const double scale = default_m2l_scale(k, p, (c2 - c1).norm());
    const auto tab_full = full_op.precompute_from(derivs, c2 - c1, scale);
    const auto tab_c = op_c.precompute_from(derivs, c2 - c1, scale);
    thread_flops() = saved;
    out.push_back({"full", m2l_fft_flops(full_op, tab_full, full, d)});
    out.push_back({"compressed", count_flops([&] { op_c.apply_direct(derivs, stored); })});
    out.push_back({"compressed+fft", m2l_fft_flops(op_c, tab_c, stored, d)});
  } else if (op == "M2P") {
    out.push_back({"full", count_flops([&] { m2p_uncompressed(MultipoleExpansion<T>{c1, 0.5, p, full}, x, k, plan); })});
    out.push_back({"compressed", count_flops([&] { m2p(MultipoleExpansion<T>{c1, 0.5, p, stored}, x, k, plan); })});
  } else if (op == "L2P") {
    out.push_back({"full", count_flops([&] { l2p_uncompressed(LocalExpansion<T>{c2, 1.0, p, full}, x, plan); })});
    out.push_back({"compressed", count_flops([&] { l2p(LocalExpansion<T>{c2, 1.0, p, stored}, x, plan); })});
  } else {
    throw std::invalid_argument("unknown operator '" + op + "'");
  }
  return out;
}

}  // namespace detail

inline std::vector<OpcountRow> run_opcount(const OpcountConfig& cfg) {
  const Kernel k = cfg.kernel.make();
  if (cfg.orders.empty() || cfg.ops.empty()) throw std::invalid_argument("orders and ops must not be empty");
  for (const auto& op : cfg.ops)
    if (std::find(operator_names().begin(), operator_names().end(), op) == operator_names().end())
      throw std::invalid_argument("unknown operator '" + op + "'");
  struct Task {
    std::string op;
    int p;
  };
  std::vector<Task> tasks;
  for (const auto& op : cfg.ops)
    for (int p : cfg.orders) tasks.push_back({op, p});
  std::vector<std::vector<std::pair<std::string, std::uint64_t>>> results(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t i) {
    results[i] = dispatch_counted(k, [&]<class T>() { return detail::opcount_one<T>(k, tasks[i].op, tasks[i].p); });
  });
  std::vector<OpcountRow> rows;
  for (std::size_t i = 0; i < tasks.size(); ++i)
    for (const auto& [rep, flops] : results[i]) rows.push_back({k.name(), tasks[i].op, tasks[i].p, rep, flops});
  return rows;
}

/// Log-log slope of flops against p for one operator and representation.
inline double opcount_slope(const std::vector<OpcountRow>& rows, const std::string& op, const std::string& rep) {
  std::vector<double> ps, fl;
  for (const auto& r : rows)
    if (r.op == op && r.representation == rep) {
      ps.push_back(r.p);
      fl.push_back(static_cast<double>(r.flops));
    }
  return loglog_slope(ps, fl);
}

// ---------------------------------------------------------------------------
// Plan inspection

inline std::string run_plan_inspect(const PdeOperator& pde, int p) {
  const CompressionPlan plan(pde, p);
  std::ostringstream os;
  std::string text = pde.str();
  while (!text.empty() && text.back() == '\n') text.pop_back();
  os << text << '\n';
  os << "order: " << p << '\n';
  os << "N(p): " << plan.full_size() << '\n';
  os << "stored |j|: " << plan.stored_size() << '\n';
  os << "property 1: " << (plan.has_property1() ? "yes" : "no") << '\n';
  os << "slices:";
  for (const Slice& s : plan.slices()) os << " (axis " << s.axis + 1 << ", level " << s.level << ')';
  os << '\n';
  os << "fft extent:";
  for (int m : plan.fft_extent()) os << ' ' << m;
  os << '\n';
  os << "fft shape:";
  for (int m : plan.fft_shape()) os << ' ' << m;
  os << '\n';
  if (plan.dim() == 2) os << "footprint (# stored, . eliminated; m2 grows upward):\n" << footprint(plan);
  return os.str();
}

// ---------------------------------------------------------------------------
// FMM benchmark

struct FmmBenchConfig {
  KernelSpec kernel;
  std::vector<std::size_t> sizes{1000, 10000};
  int order = 10;
  int depth = 0;  // 0: chosen from N
  std::uint64_t seed = 1;
  std::vector<M2LMode> modes{M2LMode::fft};
  std::size_t check_targets = 1000;
  bool count_flops = false;
  double scale_factor = 0;
};

struct FmmBenchRow {
  std::size_t n;
  int p;
  int depth;
  M2LMode mode;
  double max_rel_err;
  double l2_rel_err;
  double wall_ms;
  double mode_diff;     // l2 relative difference to the first listed mode
  std::uint64_t flops;  // 0 unless counted
};

inline std::vector<FmmBenchRow> run_fmm_bench(const FmmBenchConfig& cfg) {
  const Kernel k = cfg.kernel.make();
  const int d = k.dim();
  const CompressionPlan plan(k.pde(), cfg.order);
  std::vector<FmmBenchRow> rows;
  for (std::size_t n : cfg.sizes) {
    Rng rng(cfg.seed);
    std::vector<Point> pts(n, Point(d));
    for (auto& x : pts)
      for (int a = 0; a < d; ++a) x[a] = rng.uniform();
    std::vector<double> w(n);
    for (auto& v : w) v = rng.uniform_open();
    const int depth = cfg.depth > 0 ? cfg.depth : depth_for(n, d);
    const std::size_t m = std::min(n, cfg.check_targets);
    const std::vector<Point> sample(pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(m));
    dispatch_scalar(k, [&]<class T>() {
      std::vector<T> wt(w.begin(), w.end());
      const auto ref = direct_reference<T>(pts, wt, sample, k);
      std::vector<T> first;
      for (M2LMode mode : cfg.modes) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto tree = build_tree(pts, pts, depth, RootBox{Point::filled(d, 0.0), 1.0});
        const auto phi = evaluate_fmm<T>(tree, k, plan, wt, mode, nullptr, cfg.scale_factor);
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        double mx = 0, num = 0, den = 0;
        for (std::size_t i = 0; i < m; ++i) {
          const double e = std::abs(phi[i] - ref[i]);
          mx = std::max(mx, e / std::abs(ref[i]));
          num += e * e;
          den += std::norm(std::complex<double>(ref[i]));
        }
        double diff = 0;
        if (first.empty()) {
          first = phi;
        } else {
          std::vector<T> delta(phi.size());
          for (std::size_t i = 0; i < phi.size(); ++i) delta[i] = phi[i] - first[i];
          diff = detail::l2_ratio(delta, first);
        }
        std::uint64_t flops = 0;
        if (cfg.count_flops) {
          dispatch_counted(k, [&]<class C>() {
            const std::vector<C> wc(w.begin(), w.end());
            FlopScope scope;
            evaluate_fmm<C>(tree, k, plan, wc, mode, nullptr, cfg.scale_factor);
            flops = scope.elapsed().total();
          });
        }
        rows.push_back({n, cfg.order, depth, mode, mx, std::sqrt(num / den), ms, diff, flops});
      }
    });
  }
  return rows;
}

}  // namespace cfmm
