#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "rattleback/heteroclinic.hpp"
#include "support.hpp"

namespace rb = rattleback;
using rb::HetBranch;
using rb::Vec3;
using rbtest::Sampler;

namespace {

// The connecting orbits as printed, cosh/sinh and all. Only trusted for
// moderate arguments, where cosh u + sinh u does not cancel badly.
Vec3 printed(HetBranch b, double M, double k, double lam, double t) {
  const double m = std::abs(M), M2 = M * M;
  switch (b) {
    case HetBranch::PlusZero:
    case HetBranch::MinusZero: {
      const double u = m * (lam * t + k);
      const double den = M2 * std::cosh(2 * m * k) + std::cosh(2 * m * lam * t) +
                         M2 * std::sinh(2 * m * k) + std::sinh(2 * m * lam * t);
      const double x = 2 * M2 * (std::cosh(u) + std::sinh(u)) / den;
      const double zt = m * (M2 * std::cosh(2 * m * k) - std::cosh(2 * m * lam * t) +
                             M2 * std::sinh(2 * m * k) - std::sinh(2 * m * lam * t)) / den;
      return Vec3(b == HetBranch::PlusZero ? x : -x, 0, zt);
    }
    case HetBranch::ZeroPlus:
    case HetBranch::ZeroMinus: {
      const double v = m * (t + k);
      const double y = 2 * M2 / ((M2 + 1) * std::cosh(v) + (M2 - 1) * std::sinh(v));
      const double e = M2 * std::cosh(2 * v) + M2 * std::sinh(2 * v);
      const double z = m * (-1 + e) / (1 + e);
      return Vec3(0, b == HetBranch::ZeroPlus ? y : -y, z);
    }
  }
  return Vec3::Zero();
}

std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * i / (n - 1));
  return out;
}

}  // namespace

TEST(Heteroclinic, PointValues) {
  const rb::ModelParams p(2);
  EXPECT_LT((rb::het_state(HetBranch::ZeroPlus, {1, 0}, p, 0) - Vec3(0, 1, 0)).norm(), 1e-15);
  EXPECT_LT((rb::het_state(HetBranch::PlusZero, {1, 0}, p, 0) - Vec3(1, 0, 0)).norm(), 1e-15);
  EXPECT_LT((rb::het_state(HetBranch::ZeroMinus, {1, 0}, p, 0) - Vec3(0, -1, 0)).norm(), 1e-15);
  EXPECT_LT((rb::het_state(HetBranch::MinusZero, {1, 0}, p, 0) - Vec3(-1, 0, 0)).norm(), 1e-15);
}

TEST(Heteroclinic, MatchesPrintedFormulas) {
  for (int n : {2, 3}) {
    const rb::ModelParams p(n);
    for (double M : {-2.0, -0.5, 0.5, 1.0, 1.7}) {
      for (double k : {-1.0, 0.0, 0.6}) {
        for (HetBranch b : rb::kAllBranches) {
          // Keep every exponent below 10 so the oracle's own cancellation
          // (about eps e^|u|) stays under the tolerance.
          const double T = 5.0 / (std::abs(M) * n);
          for (double t : grid(-T, T, 41)) {
            const Vec3 want = printed(b, M, k, n, t);
            const Vec3 got = rb::het_state(b, {M, k}, p, t);
            EXPECT_LT((got - want).norm(), 1e-10 * std::abs(M)) << to_string(b) << " M " << M << " k " << k << " t " << t;
          }
        }
      }
    }
  }
}

TEST(Heteroclinic, MirrorBranches) {
  const rb::ModelParams p(3);
  for (double t : grid(-4, 4, 17)) {
    const Vec3 a = rb::het_state(HetBranch::ZeroPlus, {1.3, 0.2}, p, t);
    const Vec3 b = rb::het_state(HetBranch::ZeroMinus, {1.3, 0.2}, p, t);
    EXPECT_EQ(b, Vec3(a(0), -a(1), a(2)));
    const Vec3 c = rb::het_state(HetBranch::PlusZero, {1.3, 0.2}, p, t);
    const Vec3 d = rb::het_state(HetBranch::MinusZero, {1.3, 0.2}, p, t);
    EXPECT_EQ(d, Vec3(-c(0), c(1), c(2)));
  }
}

TEST(Heteroclinic, FiniteForHugeTimes) {
  const rb::ModelParams p(6);
  for (HetBranch b : rb::kAllBranches) {
    for (double t : {-1e6, -800.0, -360.0, 360.0, 800.0, 1e6}) {
      const Vec3 s = rb::het_state(b, {3.0, 0.5}, p, t);
      EXPECT_TRUE(s.allFinite());
      EXPECT_NEAR(std::abs(s(2)), 3.0, 1e-12);
    }
  }
}

TEST(Heteroclinic, ResidualExamples) {
  const rb::ModelParams p(2);
  const auto ts = grid(-5, 5, 11);
  EXPECT_LT(rb::het_residual(HetBranch::ZeroPlus, {1, 0}, p, ts), 1e-8);
  EXPECT_LT(rb::het_residual(HetBranch::PlusZero, {1, 0}, p, ts), 1e-8);
  const std::vector<double> far = {-40, 40};
  for (HetBranch b : rb::kAllBranches) EXPECT_LT(rb::het_residual(b, {1, 0}, p, far), 1e-10);
}

TEST(Heteroclinic, ResidualProperty) {
  Sampler rng(41);
  for (int n : {2, 3}) {
    const rb::ModelParams p(n);
    for (double M : {-2.0, -1.0, -0.5, 0.5, 1.0, 2.0}) {
      for (double k : {-1.0, 0.0, 1.0}) {
        std::vector<double> ts;
        for (int i = 0; i < 50; ++i) ts.push_back(rng.uniform(-10 / std::abs(M), 10 / std::abs(M)));
        for (HetBranch b : rb::kAllBranches) {
          EXPECT_LT(rb::het_residual(b, {M, k}, p, ts), 1e-7)
              << to_string(b) << " lambda " << n << " M " << M << " k " << k;
        }
      }
    }
  }
}

TEST(Heteroclinic, ShiftLaw) {
  // k shifts time by +k on the (0,+-) branches and by -k/lambda on (+-,0).
  for (int n : {2, 3, 4}) {
    const rb::ModelParams p(n);
    for (double M : {-1.5, 0.5, 2.0}) {
      for (double k : {-1.0, 0.4, 1.0}) {
        for (double t : grid(-3, 3, 13)) {
          for (HetBranch b : {HetBranch::ZeroPlus, HetBranch::ZeroMinus}) {
            EXPECT_LT((rb::het_state(b, {M, k}, p, t) - rb::het_state(b, {M, 0}, p, t + k)).norm(), 1e-12);
          }
          for (HetBranch b : {HetBranch::PlusZero, HetBranch::MinusZero}) {
            EXPECT_LT((rb::het_state(b, {M, k}, p, t) - rb::het_state(b, {M, 0}, p, t - k / n)).norm(), 1e-12);
          }
        }
      }
    }
  }
}

TEST(Heteroclinic, Limits) {
  const rb::ModelParams p2(2);
  auto lim = rb::het_limits(HetBranch::ZeroPlus, {1, 0}, p2);
  EXPECT_LT((lim.past - Vec3(0, 0, -1)).norm(), 1e-8);
  EXPECT_LT((lim.future - Vec3(0, 0, 1)).norm(), 1e-8);
  lim = rb::het_limits(HetBranch::PlusZero, {2, 0}, p2);
  // Along y = 0 the z coordinate decreases, so this branch runs north to south.
  EXPECT_LT((lim.past - Vec3(0, 0, 2)).norm(), 1e-8);
  EXPECT_LT((lim.future - Vec3(0, 0, -2)).norm(), 1e-8);
  for (int n : {2, 3}) {
    const rb::ModelParams p(n);
    for (double M : {-2.0, -0.5, 1.0}) {
      for (HetBranch b : rb::kAllBranches) EXPECT_LT(rb::het_limits(b, {M, 0.5}, p).gap, 1e-8);
    }
  }
}

TEST(Heteroclinic, OnSingularFiber) {
  const rb::ModelParams p(2);
  const std::vector<double> zero = {0.0};
  auto dev = rb::het_fiber_check(HetBranch::ZeroPlus, {1, 0}, p, zero);
  EXPECT_EQ(dev.H, 0.0);
  EXPECT_LT(dev.C, 1e-15);
  for (int n : {2, 3}) {
    const rb::ModelParams q(n);
    for (double M : {-2.0, 0.5, 1.0}) {
      for (HetBranch b : rb::kAllBranches) {
        const auto d = rb::het_fiber_check(b, {M, -0.3}, q, grid(-20, 20, 401));
        EXPECT_EQ(d.H, 0.0);
        EXPECT_LT(d.C, 1e-10);
      }
    }
  }
}

TEST(Heteroclinic, BranchesAreDisjointOpenSemicircles) {
  const rb::ModelParams p(2);
  for (double t : grid(-8, 8, 161)) {
    const Vec3 a = rb::het_state(HetBranch::PlusZero, {1, 0}, p, t);
    const Vec3 b = rb::het_state(HetBranch::MinusZero, {1, 0}, p, t);
    const Vec3 c = rb::het_state(HetBranch::ZeroPlus, {1, 0}, p, t);
    const Vec3 d = rb::het_state(HetBranch::ZeroMinus, {1, 0}, p, t);
    EXPECT_TRUE(a(0) > 0 && a(1) == 0);
    EXPECT_TRUE(b(0) < 0 && b(1) == 0);
    EXPECT_TRUE(c(1) > 0 && c(0) == 0);
    EXPECT_TRUE(d(1) < 0 && d(0) == 0);
    for (const Vec3& s : {a, b, c, d}) EXPECT_NEAR(s.norm(), 1.0, 1e-15);
  }
}

TEST(Heteroclinic, Validation) {
  const rb::ModelParams p(2);
  EXPECT_THROW(rb::het_state(HetBranch::ZeroPlus, {0, 0}, p, 0), rb::Error);
  EXPECT_THROW(rb::het_state(HetBranch::ZeroPlus, {1, 0}, rb::ModelParams(2.5), 0), rb::Error);
}

TEST(Heteroclinic, Csv) {
  const rb::ModelParams p(2);
  std::ostringstream out;
  const std::vector<double> ts = {0.0};
  rb::write_heteroclinic_csv(out, HetBranch::ZeroPlus, {1, 0}, p, ts);
  std::istringstream in(out.str());
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "t,x,y,z,H,C,residual");
  EXPECT_EQ(row.rfind("0,0,1,0,0,0.5,", 0), 0u) << row;
}
