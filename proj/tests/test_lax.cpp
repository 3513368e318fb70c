#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "rattleback/integrate.hpp"
#include "rattleback/lax.hpp"
#include "support.hpp"

namespace rb = rattleback;
using rb::Mat3;
using rb::Vec3;
using rbtest::Sampler;

namespace {

// Entry-by-entry derivative of L along the hand-written field, minus the
// commutator multiplied out with explicit loops.
double brute_residual(const Vec3& s, double lam) {
  const Mat3 L = rb::lax_matrices(s, rb::ModelParams(lam)).L;
  const Mat3 B = rb::lax_matrices(s, rb::ModelParams(lam)).B;
  const Vec3 v = rbtest::oracle::field(s, lam);
  const double r = std::sqrt(lam), r1 = std::sqrt(lam + 1);
  Mat3 dL = Mat3::Zero();
  dL(0, 1) = -v(0) + v(1) * r;
  dL(0, 2) = v(0) * r + v(1);
  dL(1, 2) = v(2) * r1;
  dL(1, 0) = -dL(0, 1);
  dL(2, 0) = -dL(0, 2);
  dL(2, 1) = -dL(1, 2);
  double worst = 0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double c = 0;
      for (int k = 0; k < 3; ++k) c += L(i, k) * B(k, j) - B(i, k) * L(k, j);
      worst = std::max(worst, std::abs(dL(i, j) - c));
    }
  }
  return worst;
}

}  // namespace

TEST(Lax, ZeroState) {
  const auto pair = rb::lax_matrices(Vec3::Zero().eval(), rb::ModelParams(2));
  EXPECT_EQ(pair.L, Mat3::Zero());
  EXPECT_EQ(pair.B, Mat3::Zero());
}

TEST(Lax, EntriesAtExamplePoint) {
  const auto pair = rb::lax_matrices(Vec3(1, 2, 3), rb::ModelParams(2));
  EXPECT_NEAR(pair.L(0, 1), -1 + 2 * std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(pair.L(0, 2), std::sqrt(2.0) + 2, 1e-15);
  EXPECT_NEAR(pair.L(1, 2), 3 * std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(pair.B(0, 1), (-std::sqrt(2.0) + 2) * std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(pair.B(1, 2), 3 * std::sqrt(2.0), 1e-15);
}

TEST(Lax, AntisymmetricAndB13Zero) {
  Sampler rng(7);
  for (int n : rbtest::kLambdas) {
    for (int i = 0; i < 200; ++i) {
      const auto pair = rb::lax_matrices(rng.state(3), rb::ModelParams(n));
      EXPECT_EQ(pair.L, (-pair.L.transpose()).eval());
      EXPECT_EQ(pair.B, (-pair.B.transpose()).eval());
      EXPECT_EQ(pair.B(0, 2), 0.0);
    }
  }
}

TEST(Lax, ResidualExamples) {
  const rb::ModelParams p(2);
  EXPECT_LT(rb::lax_residual(Vec3(1, 2, 3), p), 1e-12 * (1 + std::pow(Vec3(1, 2, 3).norm(), 3)));
  for (int n : rbtest::kLambdas) {
    const rb::ModelParams q(n);
    for (double M : {-1.5, 1.0, 2.0}) {
      for (auto kind : {rb::EquilibriumKind::StablePlus, rb::EquilibriumKind::StableMinus}) {
        const Vec3 e = rb::make_equilibrium(kind, M, q).point;
        const Mat3 dL = rb::lax_derivative(e, q);
        EXPECT_LT(dL.cwiseAbs().maxCoeff(), 1e-12 * M * M * n);
        EXPECT_LT(rb::lax_residual(e, q), 1e-12 * (1 + std::pow(e.norm(), 3)));
      }
    }
  }
}

TEST(Lax, ResidualProperty) {
  Sampler rng(2024);
  for (int n : rbtest::kLambdas) {
    const rb::ModelParams p(n);
    for (int i = 0; i < 10000; ++i) {
      const Vec3 s = rng.state(rng.uniform(0.1, 10));
      const double scale = 1 + std::pow(s.norm(), 3);
      ASSERT_LT(rb::lax_residual(s, p), 1e-12 * scale) << s.transpose();
      if (i % 100 == 0) {
        EXPECT_LT(brute_residual(s, n), 1e-12 * scale);
      }
    }
  }
}

TEST(Lax, TraceExample) {
  const auto inv = rb::isospectral_invariants(Vec3(1, 2, 3), rb::ModelParams(2));
  EXPECT_NEAR(inv.trace_L2, -84.0, 1e-12 * 84);
}

TEST(Lax, TraceIsCasimirMultiple) {
  Sampler rng(99);
  for (int n : rbtest::kLambdas) {
    const rb::ModelParams p(n);
    for (int i = 0; i < 1000; ++i) {
      const Vec3 s = rng.state(5);
      const double want = -4.0 * (n + 1) * 0.5 * s.squaredNorm();
      EXPECT_LE(std::abs(rb::isospectral_invariants(s, p).trace_L2 - want),
                1e-12 * std::abs(want));
    }
  }
}

TEST(Lax, EigenvaluesMatchGeneralSolver) {
  Sampler rng(5);
  for (int n : {2, 3, 6}) {
    const rb::ModelParams p(n);
    for (int i = 0; i < 100; ++i) {
      const Vec3 s = rng.state(2);
      const Mat3 L = rb::lax_matrices(s, p).L;
      Eigen::EigenSolver<Mat3> es(L, false);
      std::vector<double> mags;
      for (int k = 0; k < 3; ++k) {
        EXPECT_LT(std::abs(es.eigenvalues()(k).real()), 1e-10 * (1 + L.norm()));
        mags.push_back(std::abs(es.eigenvalues()(k)));
      }
      std::sort(mags.begin(), mags.end());
      const auto inv = rb::isospectral_invariants(s, p);
      for (int k = 0; k < 3; ++k) EXPECT_NEAR(inv.eig_abs[k], mags[k], 1e-10 * (1 + L.norm()));
    }
  }
}

TEST(Lax, IsospectralAlongTrajectory) {
  Sampler rng(11);
  for (int n : {2, 3, 4}) {
    const rb::ModelParams p(n);
    for (int i = 0; i < 3; ++i) {
      rb::IntegratorConfig cfg;
      cfg.method = rb::Method::RK45Adaptive;
      cfg.tol_abs = cfg.tol_rel = 1e-12;
      cfg.t_end = 100;
      const auto traj = rb::integrate(rng.state_off_plane(1.5, 0.1), rb::rattleback_field(p), cfg, p);
      const auto check = rb::lax_check(traj.states, p);
      EXPECT_EQ(check.samples, traj.states.size());
      EXPECT_LT(check.eig_drift, 1e-7);
      EXPECT_LT(check.max_scaled_residual, 1e-12);
    }
  }
}

TEST(Lax, CheckOnEmptyInput) {
  const auto check = rb::lax_check({}, rb::ModelParams(2));
  EXPECT_EQ(check.samples, 0u);
  EXPECT_EQ(check.eig_drift, 0.0);
}
