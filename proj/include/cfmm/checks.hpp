#pragma once

// Numerical assertions behind `--check`. Each returns the list of violated
// expectations; an empty list means the run passed.

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "cfmm/experiments.hpp"

namespace cfmm {

namespace detail {

inline std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

}  // namespace detail

/// Equal-order kernels must translate losslessly; for Helmholtz the error
/// must fall off like R^(p+1) for low orders and reach roundoff for high ones.
inline std::vector<std::string> check_m2m_accuracy(const std::vector<M2mAccuracyRow>& rows, bool helmholtz) {
  std::vector<std::string> bad;
  std::map<int, std::vector<const M2mAccuracyRow*>> by_p;
  for (const auto& r : rows) by_p[r.p].push_back(&r);
  for (const auto& [p, series] : by_p) {
    if (!helmholtz) {
      for (const auto* r : series)
        if (!(r->eps_rel <= 1e-13)) bad.push_back(detail::fmt("p=%g R=%g: eps_rel %.3e > 1e-13", p, r->R, r->eps_rel));
      continue;
    }
    if (p <= 6) {
      std::vector<double> R, e;
      for (const auto* r : series)
        if (r->R >= 0x1p-7 && r->R <= 0x1p-2) {
          R.push_back(r->R);
          e.push_back(r->eps_rel);
        }
      if (R.size() < 2) continue;
      const double s = loglog_slope(R, e);
      if (std::abs(s - (p + 1)) > 1.0) bad.push_back(detail::fmt("p=%g: slope %.3f, expected %g +- 1", p, s, p + 1));
    } else {
      const M2mAccuracyRow* smallest = series.front();
      for (const auto* r : series)
        if (r->R < smallest->R) smallest = r;
      if (!(smallest->eps_rel <= 1e-13))
        bad.push_back(detail::fmt("p=%g R=%g: eps_rel %.3e does not reach 1e-13", p, smallest->R, smallest->eps_rel));
    }
  }
  return bad;
}

/// The compression error must stay within a factor 10 of the truncation
/// error; asserted for kappa <= 10.
inline std::vector<std::string> check_m2m_kappa(const std::vector<M2mKappaRow>& rows) {
  std::vector<std::string> bad;
  for (const auto& r : rows)
    if (r.kappa <= 10 && !(r.eps_rel <= 10 * r.eps_trunc))
      bad.push_back(
          detail::fmt("p=%g kappa=%g: eps_rel %.3e", r.p, r.kappa, r.eps_rel) +
          detail::fmt(" > 10 * eps_trunc %.3e", r.eps_trunc));
  return bad;
}

/// Slope expectations from the complexity table, applied to whichever
/// operator/representation series the rows contain.
inline std::vector<std::string> check_opcount(const std::vector<OpcountRow>& rows, const Kernel& k) {
  struct Rule {
    std::string op, rep;
    double lo, hi;
  };
  std::vector<Rule> rules;
  const int d = k.dim();
  if (k.id() == KernelId::laplace2d) rules.push_back({"P2L", "compressed", 0.7, 1.3});
  if (d == 2) {
    rules.push_back({"P2M", "compressed", 1.7, 2.3});
    rules.push_back({"M2M", "compressed", 1.7, 2.3});
    rules.push_back({"M2L", "compressed+fft", -1e9, 1.5});
    rules.push_back({"M2L", "full", 2.0, 1e9});
  } else {
    rules.push_back({"M2M", "compressed", 2.7, 3.3});
    rules.push_back({"M2L", "compressed+fft", -1e9, 2.5});
  }
  std::vector<std::string> bad;
  for (const auto& rule : rules) {
    std::size_t n = 0;
    for (const auto& r : rows) n += (r.op == rule.op && r.representation == rule.rep);
    if (n < 2) continue;
    const double s = opcount_slope(rows, rule.op, rule.rep);
    if (s < rule.lo || s > rule.hi)
      bad.push_back(rule.op + " " + rule.rep + detail::fmt(": slope %.3f outside [%g, %g]", s, rule.lo, rule.hi));
  }
  return bad;
}

inline std::vector<std::string> check_fmm_bench(const std::vector<FmmBenchRow>& rows, int dim) {
  std::vector<std::string> bad;
  for (const auto& r : rows) {
    if (!(r.l2_rel_err <= 1e-6))
      bad.push_back(detail::fmt("N=%g: l2 error %.3e > 1e-6", static_cast<double>(r.n), r.l2_rel_err));
    if (!(r.mode_diff <= 1e-10))
      bad.push_back(detail::fmt("N=%g: modes differ by %.3e", static_cast<double>(r.n), r.mode_diff));
  }
  if (dim == 2) {
    std::map<M2LMode, std::pair<std::vector<double>, std::vector<double>>> series;
    for (const auto& r : rows) {
      series[r.mode].first.push_back(static_cast<double>(r.n));
      series[r.mode].second.push_back(r.wall_ms);
    }
    for (const auto& [mode, s] : series)
      if (s.first.size() >= 3) {
        const double slope = loglog_slope(s.first, s.second);
        if (slope > 1.15) bad.push_back(m2l_mode_name(mode) + detail::fmt(": time slope %.3f > 1.15", slope));
      }
  }
  return bad;
}

}  // namespace cfmm
