#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cfmm/expansions.hpp"
#include "cfmm/stats.hpp"
#include "test_util.hpp"

using namespace cfmm;
using namespace cfmm::testing;

namespace {

double direct(const Kernel& k, const Sources<double>& s, const Point& x) {
  double v = 0;
  for (std::size_t i = 0; i < s.points.size(); ++i) v += s.weights[i] * k.eval(x - s.points[i]).real();
  return v;
}

}  // namespace

TEST(P2M, SourceAtCenterGivesUnitAlpha) {
  const CompressionPlan plan(Kernel(KernelId::laplace2d).pde(), 5);
  const Sources<double> s{{Point{0.2, 0.7}}, {1.0}};
  const auto alpha = p2m_alpha(s, Point{0.2, 0.7}, plan.table());
  EXPECT_EQ(alpha[0], 1.0);
  for (std::size_t i = 1; i < alpha.size(); ++i) EXPECT_EQ(alpha[i], 0.0);
  std::vector<double> e1(plan.full_size());
  e1[0] = 1.0;
  EXPECT_EQ(p2m(s, Point{0.2, 0.7}, 0.0, plan).beta, decompress_transpose(plan, e1));
}

TEST(P2M, HandMonomialsAtOrderOne) {
  const IndexTable table(GradedOrdering(2, 1), 1);
  const Point c{0.5, 0.5};
  const Sources<double> s{{c - Point{1, 2}}, {1.0}};
  EXPECT_EQ(p2m_alpha(s, c, table), (std::vector<double>{1, 1, 2}));
}

TEST(P2M, ZeroWeightsAndEmptySources) {
  const Kernel k(KernelId::laplace3d);
  const CompressionPlan plan(k.pde(), 4);
  const Sources<double> zero{{Point{0.1, 0, 0}, Point{0, 0.2, 0}}, {0.0, 0.0}};
  for (double b : p2m(zero, Point{0, 0, 0}, 1.0, plan).beta) EXPECT_EQ(b, 0.0);
  const auto empty = p2m(Sources<double>{}, Point{0, 0, 0}, 1.0, plan);
  EXPECT_EQ(empty.beta.size(), plan.stored_size());
  for (double b : empty.beta) EXPECT_EQ(b, 0.0);
  EXPECT_EQ(m2p(empty, Point{3, 0, 0}, k, plan), 0.0);
}

TEST(M2P, HighOrderMatchesDirectEvaluation) {
  const Kernel k(KernelId::laplace3d);
  const CompressionPlan plan(k.pde(), 20);
  const double R = 0.5;
  const Point c{0.1, 0.2, 0.3};
  const Sources<double> s{{c + Point{0.2, -0.3, 0.25}}, {1.0}};
  const auto e = p2m(s, c, R, plan);
  const Point x = c + Point{3 * R, 0, 0};
  EXPECT_LE(std::abs(m2p(e, x, k, plan) - direct(k, s, x)) / std::abs(direct(k, s, x)), 1e-8);
}

TEST(M2P, InsideBallIsRejected) {
  const Kernel k(KernelId::laplace2d);
  const CompressionPlan plan(k.pde(), 4);
  const auto e = p2m(Sources<double>{{Point{0, 0}}, {1.0}}, Point{0, 0}, 1.0, plan);
  EXPECT_THROW(m2p(e, Point{0.5, 0}, k, plan), std::domain_error);
  const MultipoleExpansion<double> bad{Point{0, 0}, 1.0, 4, {1.0, 2.0}};
  EXPECT_THROW(m2p(bad, Point{3, 0}, k, plan), std::invalid_argument);
}

TEST(M2P, TruncationErrorDecaysGeometrically) {
  const Kernel k(KernelId::laplace3d);
  const double R = 1.0, dist = 4.0;
  const Point c{0, 0, 0};
  const Sources<double> s{{Point{0.6, 0.6, 0.5}}, {1.0}};  // |y - c| close to R
  const double rho = s.points[0].norm();
  const Point x{dist, 0.3, 0.0};
  std::vector<double> ps, logs;
  for (int p = 2; p <= 16; p += 2) {
    const CompressionPlan plan(k.pde(), p);
    const double err = std::abs(m2p(p2m(s, c, R, plan), x, k, plan) - direct(k, s, x));
    ps.push_back(p);
    logs.push_back(std::log(err));
  }
  const double expected = std::log(rho / x.norm());
  EXPECT_NEAR(fit_slope(ps, logs) / expected, 1.0, 0.2);
}

TEST(P2L, SingleSourceGivesCompressedDerivatives) {
  const Kernel k(KernelId::biharmonic2d);
  const CompressionPlan plan(k.pde(), 7);
  const Point c{0.3, 0.4}, y{2.0, -1.0};
  const auto e = p2l(Sources<double>{{y}, {1.0}}, c, 1.0, plan, k);
  const auto ref = derivatives_compressed<double>(k, c - y, plan);
  EXPECT_EQ(e.theta, ref);
}

TEST(P2L, IsLinearInSources) {
  const Kernel k(KernelId::helmholtz2d, 2.0);
  const CompressionPlan plan(k.pde(), 6);
  using T = std::complex<double>;
  const Sources<T> a{{Point{3, 1}, Point{2, -2}}, {T(1, 0.5), T(-0.2, 1)}};
  const Sources<T> b{{Point{-3, 0.5}}, {T(0.7, 0)}};
  Sources<T> both = a;
  both.points.push_back(b.points[0]);
  both.weights.push_back(b.weights[0]);
  const Point c{0, 0};
  const auto ea = p2l(a, c, 1.0, plan, k), eb = p2l(b, c, 1.0, plan, k), eab = p2l(both, c, 1.0, plan, k);
  for (std::size_t i = 0; i < eab.theta.size(); ++i)
    EXPECT_LE(std::abs(eab.theta[i] - ea.theta[i] - eb.theta[i]), 1e-13 * std::abs(eab.theta[i]) + 1e-300);
}

TEST(P2L, SourceAtCenterIsSingular) {
  const Kernel k(KernelId::laplace2d);
  const CompressionPlan plan(k.pde(), 4);
  EXPECT_THROW(p2l(Sources<double>{{Point{1, 1}}, {1.0}}, Point{1, 1}, 0.5, plan, k), SingularPointError);
}

TEST(L2P, RoundTripMatchesDirectSum) {
  const Kernel k(KernelId::laplace2d);
  const CompressionPlan plan(k.pde(), 12);
  const double R = 1.0;
  std::mt19937_64 rng(31);
  Sources<double> s;
  for (int i = 0; i < 15; ++i) {
    s.points.push_back(random_annulus_point(2, 2 * R, 3 * R, rng));
    s.weights.push_back(1.0 + i * 0.1);
  }
  const auto e = p2l(s, Point{0, 0}, R, plan, k);
  for (int t = 0; t < 10; ++t) {
    const Point x = random_annulus_point(2, 0.0, R / 3, rng);
    EXPECT_LE(std::abs(l2p(e, x, plan) - direct(k, s, x)) / std::abs(direct(k, s, x)), 1e-9);
  }
}

TEST(L2P, CenterGivesConstantTerm) {
  const Kernel k(KernelId::laplace3d);
  const CompressionPlan plan(k.pde(), 6);
  std::mt19937_64 rng(32);
  const LocalExpansion<double> e{Point{1, 2, 3}, 1.0, 6, random_coeffs<double>(plan.stored_size(), rng)};
  EXPECT_DOUBLE_EQ(l2p(e, e.center, plan), e.theta[0]);
  const LocalExpansion<double> zero{Point{1, 2, 3}, 1.0, 6, std::vector<double>(plan.stored_size())};
  EXPECT_EQ(l2p(zero, Point{1.2, 2, 3}, plan), 0.0);
}

class CompressedVsFull : public ::testing::TestWithParam<KernelId> {};

TEST_P(CompressedVsFull, EvaluationAgrees) {
  const Kernel k(GetParam(), 1.0);
  const int d = k.dim();
  std::mt19937_64 rng(33);
  for (int p : {2, 5, 8, 10}) {
    const CompressionPlan plan(k.pde(), p);
    with_scalar(k, [&]<class T>() {
      Sources<T> s;
      for (int i = 0; i < 8; ++i) {
        s.points.push_back(random_annulus_point(d, 0.0, 0.5, rng));
        s.weights.push_back(random_coeffs<T>(1, rng)[0]);
      }
      const Point c = Point::filled(d, 0.0);
      const auto mc = p2m(s, c, 0.5, plan);
      const auto mu = p2m_uncompressed(s, c, 0.5, plan);
      Sources<T> far;
      for (int i = 0; i < 8; ++i) {
        far.points.push_back(random_annulus_point(d, 2.0, 3.0, rng));
        far.weights.push_back(random_coeffs<T>(1, rng)[0]);
      }
      const auto lc = p2l(far, c, 1.0, plan, k);
      const auto lu = p2l_uncompressed(far, c, 1.0, plan, k);
      for (int t = 0; t < 5; ++t) {
        const Point xo = random_annulus_point(d, 1.5, 2.5, rng);
        const T a = m2p(mc, xo, k, plan), b = m2p_uncompressed(mu, xo, k, plan);
        EXPECT_LE(std::abs(a - b) / std::abs(b), 1e-12) << k.name() << " p=" << p;
        const Point xi = random_annulus_point(d, 0.0, 0.6, rng);
        const T u = l2p(lc, xi, plan), v = l2p_uncompressed(lu, xi, plan);
        EXPECT_LE(std::abs(u - v) / std::abs(v), 1e-12) << k.name() << " p=" << p;
      }
    });
  }
}

INSTANTIATE_TEST_SUITE_P(AllKernels, CompressedVsFull,
                         ::testing::Values(KernelId::laplace2d, KernelId::laplace3d, KernelId::biharmonic2d,
                                           KernelId::helmholtz2d, KernelId::helmholtz3d),
                         [](const auto& info) { return Kernel(info.param, 1.0).name(); });

TEST(ExpansionCost, P2LPerSourceAndP2MSlopes) {
  for (auto id : {KernelId::laplace2d, KernelId::laplace3d}) {
    const Kernel k(id);
    const int d = k.dim();
    using C = Counted<double>;
    const Sources<C> s{{Point::filled(d, 0.3)}, {C(1.0)}};
    std::vector<double> ps, p2l_cost, p2m_cost;
    for (int p = 8; p <= 32; p += 4) {
      const CompressionPlan plan(k.pde(), p);
      const Point c = Point::filled(d, 3.0);
      FlopScope a;
      p2l(s, c, 1.0, plan, k);
      const double fl = static_cast<double>(a.elapsed().total());
      FlopScope b;
      p2m(s, c, 1.0, plan);
      const double fm = static_cast<double>(b.elapsed().total());
      ps.push_back(p);
      p2l_cost.push_back(fl);
      p2m_cost.push_back(fm);
    }
    EXPECT_NEAR(loglog_slope(ps, p2l_cost), d - 1, 0.3) << k.name();
    EXPECT_NEAR(loglog_slope(ps, p2m_cost), d, 0.3) << k.name();
  }
}
