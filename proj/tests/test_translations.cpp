#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "cfmm/expansions.hpp"
#include "cfmm/stats.hpp"
#include "cfmm/translations.hpp"
#include "naive_translations.hpp"
#include "test_util.hpp"

using namespace cfmm;
using namespace cfmm::testing;

namespace {

Point random_shift(int d, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Point h(d);
  for (int a = 0; a < d; ++a) h[a] = u(rng);
  return h;
}

struct Case {
  KernelId id;
  int p;
};

std::string case_name(const ::testing::TestParamInfo<Case>& info) {
  return Kernel(info.param.id, 1.0).name() + "_p" + std::to_string(info.param.p);
}

std::vector<Case> all_cases(std::initializer_list<int> orders) {
  std::vector<Case> out;
  for (const auto& k : all_kernels())
    for (int p : orders)
      out.push_back({k.id(), p});
  return out;
}

class FastVsNaive : public ::testing::TestWithParam<Case> {};

}  // namespace

TEST_P(FastVsNaive, L2LMatchesDoubleSum) {
  const Kernel k(GetParam().id, 1.0);
  const CompressionPlan plan(k.pde(), GetParam().p);
  std::mt19937_64 rng(11);
  with_scalar(k, [&]<class T>() {
    for (int trial = 0; trial < 3; ++trial) {
      const LocalExpansion<T> e{Point::filled(k.dim(), 0.0), 1.0, plan.order(),
                                random_coeffs<T>(plan.stored_size(), rng)};
      const Point h = random_shift(k.dim(), 0.5, rng);
      const auto fast = l2l(e, h, plan);
      const auto ref = naive_l2l(e.theta, h, plan);
      EXPECT_LE(rel_err(to_complex(fast.theta), to_complex(ref)), 1e-12);
    }
  });
}

TEST_P(FastVsNaive, M2MMatchesDoubleSum) {
  const Kernel k(GetParam().id, 1.0);
  const CompressionPlan plan(k.pde(), GetParam().p);
  std::mt19937_64 rng(12);
  with_scalar(k, [&]<class T>() {
    for (int trial = 0; trial < 3; ++trial) {
      const MultipoleExpansion<T> e{Point::filled(k.dim(), 0.0), 1.0, plan.order(),
                                    random_coeffs<T>(plan.stored_size(), rng)};
      const Point h = random_shift(k.dim(), 0.5, rng);
      const auto fast = m2m(e, h, plan);
      const auto ref = naive_m2m(e.beta, h, plan);
      EXPECT_LE(rel_err(to_complex(fast.beta), to_complex(ref)), 1e-12);
    }
  });
}

TEST_P(FastVsNaive, UncompressedPathsMatchDoubleSum) {
  const Kernel k(GetParam().id, 1.0);
  const CompressionPlan plan(k.pde(), GetParam().p);
  std::mt19937_64 rng(13);
  with_scalar(k, [&]<class T>() {
    const Point c = Point::filled(k.dim(), 0.0);
    const Point h = random_shift(k.dim(), 0.5, rng);
    const MultipoleExpansion<T> m{c, 1.0, plan.order(), random_coeffs<T>(plan.full_size(), rng)};
    EXPECT_LE(rel_err(to_complex(m2m_uncompressed(m, h, plan).beta),
                      to_complex(naive_m2m_full(m.beta, h, plan.table()))),
              1e-12);
    const LocalExpansion<T> l{c, 1.0, plan.order(), random_coeffs<T>(plan.full_size(), rng)};
    EXPECT_LE(rel_err(to_complex(l2l_uncompressed(l, h, plan).theta),
                      to_complex(naive_l2l_full(l.theta, h, plan.table()))),
              1e-12);
  });
}

INSTANTIATE_TEST_SUITE_P(AllKernels, FastVsNaive, ::testing::ValuesIn(all_cases({2, 4, 6, 8})), case_name);

TEST(L2L, ZeroDisplacementKeepsCoefficients) {
  const CompressionPlan plan(Kernel(KernelId::laplace2d).pde(), 8);
  std::mt19937_64 rng(14);
  const LocalExpansion<double> e{Point{0.3, 0.1}, 1.0, 8, random_coeffs<double>(plan.stored_size(), rng)};
  const auto out = l2l(e, e.center, plan);
  for (std::size_t k = 0; k < out.theta.size(); ++k) EXPECT_NEAR(out.theta[k], e.theta[k], 1e-15);
}

TEST(L2L, TwoHalfShiftsEqualOneShift) {
  // Exact only when truncation commutes with the PDE, i.e. for equal-order PDEs.
  for (const auto& k : {Kernel(KernelId::laplace2d), Kernel(KernelId::laplace3d), Kernel(KernelId::biharmonic2d)}) {
    const CompressionPlan plan(k.pde(), 8);
    std::mt19937_64 rng(15);
    with_scalar(k, [&]<class T>() {
      const Point c = Point::filled(k.dim(), 0.0);
      const LocalExpansion<T> e{c, 1.0, 8, random_coeffs<T>(plan.stored_size(), rng)};
      const Point h = random_shift(k.dim(), 0.4, rng);
      const auto once = l2l(e, h, plan);
      const auto twice = l2l(l2l(e, 0.5 * h, plan), h, plan);
      EXPECT_LE(rel_err(to_complex(twice.theta), to_complex(once.theta)), 1e-12) << k.name();
    });
  }
}

TEST(L2L, ReproducesPolynomialAtNewCenter) {
  // Recentring a truncated local expansion is exact: evaluation is unchanged.
  const Kernel k(KernelId::laplace3d);
  const CompressionPlan plan(k.pde(), 6);
  std::mt19937_64 rng(16);
  const LocalExpansion<double> e{Point{0, 0, 0}, 1.0, 6, random_coeffs<double>(plan.stored_size(), rng)};
  const auto moved = l2l(e, Point{0.2, -0.1, 0.3}, plan);
  const Point x{0.25, 0.05, -0.1};
  EXPECT_NEAR(l2p(moved, x, plan), l2p(e, x, plan), 1e-12 * std::abs(l2p(e, x, plan)) + 1e-13);
}

TEST(M2M, ZeroDisplacementKeepsPotentialForEqualOrder) {
  for (auto id : {KernelId::laplace2d, KernelId::laplace3d, KernelId::biharmonic2d}) {
    const Kernel k(id);
    const CompressionPlan plan(k.pde(), 8);
    std::mt19937_64 rng(17);
    Sources<double> src;
    for (int s = 0; s < 10; ++s) {
      src.points.push_back(random_shift(k.dim(), 0.3, rng));
      src.weights.push_back(std::uniform_real_distribution<double>(0, 1)(rng));
    }
    const Point c = Point::filled(k.dim(), 0.0);
    const auto e = p2m(src, c, 1.0, plan);
    const auto same = m2m(e, c, plan, 1.0);
    const Point x = Point::filled(k.dim(), 2.0);
    const double before = m2p(e, x, k, plan);
    EXPECT_LE(std::abs(m2p(same, x, k, plan) - before) / std::abs(before), 1e-13) << k.name();
  }
}

TEST(M2M, EqualOrderPdeTranslationIsExact) {
  // Sources in a box of side 2R around (R,...,R), shifted to the origin.
  for (auto id : {KernelId::laplace2d, KernelId::laplace3d, KernelId::biharmonic2d}) {
    const Kernel k(id);
    const int d = k.dim();
    for (int p : {4, 10}) {
      const CompressionPlan plan(k.pde(), p);
      for (double R : {std::ldexp(1.0, -10), std::ldexp(1.0, -6), std::ldexp(1.0, -2)}) {
        std::mt19937_64 rng(18);
        std::uniform_real_distribution<double> u(0, 2 * R), w(0, 1);
        Sources<double> src;
        for (int s = 0; s < 30; ++s) {
          Point y(d);
          for (int a = 0; a < d; ++a) y[a] = u(rng);
          src.points.push_back(y);
          src.weights.push_back(w(rng));
        }
        const Point c1 = Point::filled(d, R), c2 = Point::filled(d, 0.0);
        const auto mc = m2m(p2m(src, c1, std::sqrt(d) * R, plan), c2, plan, 2 * std::sqrt(d) * R);
        const auto mu = m2m_uncompressed(p2m_uncompressed(src, c1, std::sqrt(d) * R, plan), c2, plan,
                                         2 * std::sqrt(d) * R);
        double worst = 0;
        for (const Point& x : {Point::filled(d, 1.0), Point::filled(d, 0.6), Point::filled(d, 1.4)}) {
          const double a = m2p(mc, x, k, plan), b = m2p_uncompressed(mu, x, k, plan);
          worst = std::max(worst, std::abs(a - b) / std::abs(b));
        }
        EXPECT_LE(worst, 1e-13) << k.name() << " p=" << p << " R=" << R;
      }
    }
  }
}

TEST(M2L, FftShapeForLaplace3d) {
  const Kernel k(KernelId::laplace3d);
  const CompressionPlan plan(k.pde(), 10);
  const auto tab = m2l_precompute<double>(plan, k, Point{4, 0, 0});
  EXPECT_EQ(tab.fft_shape, (std::vector<int>{21, 21, 3}));
  EXPECT_EQ(tab.plan_order, 10);
  EXPECT_DOUBLE_EQ(tab.scale, 10.0 / 4.0);
}

TEST(M2L, DefaultScales) {
  EXPECT_DOUBLE_EQ(default_m2l_scale(Kernel(KernelId::laplace2d), 16, 2.0), 8.0);
  EXPECT_DOUBLE_EQ(default_m2l_scale(Kernel(KernelId::biharmonic2d), 16, 1.0), 8.0);
}

TEST(M2L, FftMatchesDirect) {
  for (const auto& k : all_kernels()) {
    for (int p : {4, 5, 8, 12}) {
      const CompressionPlan plan(k.pde(), p);
      const CompressionPlan plan2p(k.pde(), 2 * p);
      std::mt19937_64 rng(19);
      const Point offset = random_annulus_point(k.dim(), 2.0, 4.0, rng);
      with_scalar(k, [&]<class T>() {
        const MultipoleExpansion<T> e{Point::filled(k.dim(), 0.0), 0.5, p, random_coeffs<T>(plan.stored_size(), rng)};
        const auto derivs = derivatives_full<T>(k, offset, plan2p);
        const auto direct = m2l_direct(e, offset, plan, plan2p.table(), std::span<const T>(derivs));
        const auto fast = m2l_apply(m2l_precompute<T>(plan, k, offset), e, plan);
        EXPECT_LE(rel_err(to_complex(fast.theta), to_complex(direct.theta)), 1e-11) << k.name() << " p=" << p;
        EXPECT_EQ(fast.center, offset);
      });
    }
  }
}

TEST(M2L, FullGridFftMatchesDirectDoubleSum) {
  const Kernel k(KernelId::laplace3d);
  const CompressionPlan plan(k.pde(), 6);
  const CompressionPlan plan2p(k.pde(), 12);
  const M2LOperator<double> op(plan, false);
  EXPECT_EQ(op.fft_shape(), (std::vector<int>{13, 13, 13}));
  std::mt19937_64 rng(20);
  const Point offset{3, -1, 2};
  const auto alpha = random_coeffs<double>(plan.full_size(), rng);
  const auto derivs = derivatives_full<double>(k, offset, plan2p);
  const auto ref = op.apply_direct(derivs, alpha);
  const auto got = op.apply(op.precompute(k, offset), alpha);
  EXPECT_LE(rel_err(to_complex(got), to_complex(ref)), 1e-11);
}

TEST(M2L, DeltaInputGivesDerivatives) {
  const Kernel k(KernelId::biharmonic2d);
  const CompressionPlan plan(k.pde(), 9);
  const Point offset{2.5, -1.5};
  std::vector<double> beta(plan.stored_size());
  beta[0] = 1.0;  // the zero multi-index is always stored
  ASSERT_EQ(plan.j()[0], 0);
  const MultipoleExpansion<double> e{Point{0, 0}, 0.5, 9, beta};
  // A delta input leaves only the low-degree part of the output, so balance the
  // scaled grid around degree p rather than 2p.
  const auto out = m2l_apply(m2l_precompute<double>(plan, k, offset, 0.5 * 9 / offset.norm()), e, plan);
  const auto ref = derivatives_compressed<double>(k, offset, plan);
  EXPECT_LE(rel_err(to_complex(out.theta), to_complex(ref)), 1e-11);
}

TEST(M2L, ZeroInputGivesZero) {
  const Kernel k(KernelId::laplace2d);
  const CompressionPlan plan(k.pde(), 6);
  const MultipoleExpansion<double> e{Point{0, 0}, 0.5, 6, std::vector<double>(plan.stored_size())};
  for (double v : m2l_direct(e, Point{3, 0}, plan, k).theta) EXPECT_EQ(v, 0.0);
  for (double v : m2l_apply(m2l_precompute<double>(plan, k, Point{3, 0}), e, plan).theta) EXPECT_EQ(v, 0.0);
}

TEST(M2L, SingleSourceThroughDirectM2L) {
  const Kernel k(KernelId::laplace3d);
  const int p = 10;
  const CompressionPlan plan(k.pde(), p);
  // Unit boxes two boxes apart, as in a uniform tree interaction list.
  const Point c1{0.5, 0.5, 0.5}, c2{2.5, 0.5, 0.5};
  const Sources<double> src{{Point{0.3, 0.6, 0.4}}, {1.0}};
  const auto local = m2l_direct(p2m(src, c1, std::sqrt(3) / 2, plan), c2, plan, k);
  for (const Point& x : {Point{2.3, 0.6, 0.4}, Point{2.7, 0.3, 0.6}}) {
    const double ref = k.eval(x - src.points[0]).real();
    EXPECT_LE(std::abs(l2p(local, x, plan) - ref) / std::abs(ref), 1e-6);
  }
}

TEST(Translations, ChainMatchesDirectSum) {
  for (auto id : {KernelId::laplace2d, KernelId::laplace3d, KernelId::biharmonic2d}) {
    const Kernel k(id);
    const int d = k.dim();
    const int p = 12;
    const CompressionPlan plan(k.pde(), p);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-0.25, 0.25), w(0, 1);
    // Child boxes of side 1/2 inside parents of side 1; parents 3 apart.
    const Point leaf_src = Point::filled(d, 0.25), parent_src = Point::filled(d, 0.5);
    Point parent_tgt = parent_src;
    parent_tgt[0] += 3.0;
    Point leaf_tgt = parent_tgt;
    for (int a = 0; a < d; ++a) leaf_tgt[a] += 0.25;
    Sources<double> src;
    for (int s = 0; s < 20; ++s) {
      Point y = leaf_src;
      for (int a = 0; a < d; ++a) y[a] += u(rng);
      src.points.push_back(y);
      src.weights.push_back(w(rng));
    }
    const auto up = m2m(p2m(src, leaf_src, std::sqrt(d) / 4, plan), parent_src, plan, std::sqrt(d) / 2);
    const auto across = m2l_apply(m2l_precompute<double>(plan, k, parent_tgt - parent_src), up, plan);
    const auto down = l2l(across, leaf_tgt, plan);
    double worst = 0;
    for (int t = 0; t < 10; ++t) {
      Point x = leaf_tgt;
      for (int a = 0; a < d; ++a) x[a] += u(rng);
      double ref = 0;
      for (std::size_t s = 0; s < src.points.size(); ++s) ref += src.weights[s] * k.eval(x - src.points[s]).real();
      worst = std::max(worst, std::abs(l2p(down, x, plan) - ref) / std::abs(ref));
    }
    EXPECT_LE(worst, 1e-5) << k.name();
  }
}

TEST(Translations, ContractErrors) {
  const Kernel k(KernelId::laplace2d);
  const CompressionPlan plan(k.pde(), 4), other(k.pde(), 5);
  const MultipoleExpansion<double> m{Point{0, 0}, 1, 4, std::vector<double>(plan.stored_size())};
  const LocalExpansion<double> l{Point{0, 0}, 1, 4, std::vector<double>(plan.stored_size())};
  EXPECT_THROW(m2m(m, Point{1, 0}, other), std::invalid_argument);
  EXPECT_THROW(l2l(l, Point{1, 0}, other), std::invalid_argument);
  EXPECT_THROW(m2m_uncompressed(m, Point{1, 0}, plan), std::invalid_argument);
  const CompressionPlan low(k.pde(), 7);
  const auto derivs = derivatives_full<double>(k, Point{3, 0}, low);
  EXPECT_THROW(m2l_direct(m, Point{3, 0}, plan, low.table(), std::span<const double>(derivs)), std::invalid_argument);
  EXPECT_THROW(m2l_precompute<double>(plan, k, Point{0, 0}), SingularPointError);
  const auto tab = m2l_precompute<double>(other, k, Point{3, 0});
  EXPECT_THROW(m2l_apply(tab, m, plan), std::invalid_argument);
}

namespace {

std::uint64_t flops_of(auto&& f) {
  FlopScope s;
  f();
  return s.elapsed().total();
}

}  // namespace

TEST(TranslationCost, L2LAndM2MScaleLikePToTheD) {
  for (auto id : {KernelId::laplace2d, KernelId::laplace3d}) {
    const Kernel k(id);
    const int d = k.dim();
    std::vector<double> ps, l2l_flops, m2m_flops;
    for (int p = 8; p <= (d == 2 ? 32 : 20); p += 4) {
      const CompressionPlan plan(k.pde(), p);
      const Translator tr(plan);
      using C = Counted<double>;
      const LocalExpansion<C> l{Point::filled(d, 0.0), 1, p, std::vector<C>(plan.stored_size(), C(1.0))};
      const MultipoleExpansion<C> m{Point::filled(d, 0.0), 1, p, std::vector<C>(plan.stored_size(), C(1.0))};
      const Point h = Point::filled(d, 0.1);
      ps.push_back(p);
      l2l_flops.push_back(static_cast<double>(flops_of([&] { tr.l2l(l, h, 1.0); })));
      m2m_flops.push_back(static_cast<double>(flops_of([&] { tr.m2m(m, h, 1.0); })));
    }
    EXPECT_NEAR(loglog_slope(ps, l2l_flops), d, 0.3) << k.name();
    EXPECT_NEAR(loglog_slope(ps, m2m_flops), d, 0.3) << k.name();
  }
}

TEST(TranslationCost, FftM2LScalesLikePToTheDMinusOne) {
  for (auto id : {KernelId::laplace2d, KernelId::laplace3d}) {
    const Kernel k(id);
    const int d = k.dim();
    const double per_box = d == 2 ? 27.0 : 189.0;
    std::vector<double> ps, cost;
    for (int p = 8; p <= 32; p += 4) {
      const CompressionPlan plan(k.pde(), p);
      using C = Counted<double>;
      const M2LOperator<C> op(plan);
      const auto tab = op.precompute(k, Point::filled(d, 2.0));
      const std::vector<C> beta(plan.stored_size(), C(1.0));
      std::vector<complex_t<C>> spec;
      const double fwd = static_cast<double>(flops_of([&] { spec = op.forward(beta, tab.scale); }));
      std::vector<complex_t<C>> acc;
      const double mul = static_cast<double>(flops_of([&] { op.accumulate(acc, tab, spec); }));
      const double inv = static_cast<double>(flops_of([&] { op.backward(acc, tab.scale); }));
      ps.push_back(p);
      cost.push_back((fwd + inv) / per_box + mul);
    }
    EXPECT_LE(loglog_slope(ps, cost), d - 1 + 0.5) << k.name();
  }
}
