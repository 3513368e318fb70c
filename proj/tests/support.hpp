#pragma once

// Generators and independent reference computations shared by the tests.
// Nothing here calls into the library's own formulas for the quantity under
// test: cross products, derivatives and matrix products are spelled out.

#include <array>
#include <cmath>
#include <random>

#include "rattleback/core_model.hpp"

namespace rbtest {

using rattleback::Vec3;

inline constexpr std::array<int, 5> kLambdas = {2, 3, 4, 5, 6};

inline double relative_error(const Vec3& got, const Vec3& want) {
  return (got - want).norm() / std::max(1.0, want.norm());
}

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }

  /// Uniform in the cube [-r, r]^3.
  Vec3 state(double r = 2.0) { return Vec3(uniform(-r, r), uniform(-r, r), uniform(-r, r)); }

  /// Same, but with |y| > y_min.
  Vec3 state_off_plane(double r = 2.0, double y_min = 1e-3) {
    Vec3 s = state(r);
    while (std::abs(s(1)) <= y_min) s(1) = uniform(-r, r);
    return s;
  }

  /// Uniform on the sphere of radius r.
  Vec3 on_sphere(double r) {
    std::normal_distribution<double> n(0.0, 1.0);
    Vec3 v(n(rng_), n(rng_), n(rng_));
    return r * v / v.norm();
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

namespace oracle {

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return Vec3(a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2),
              a(0) * b(1) - a(1) * b(0));
}

/// The system written out by hand.
inline Vec3 field(const Vec3& s, double lam) {
  return Vec3(lam * s(0) * s(2), -s(1) * s(2), s(1) * s(1) - lam * s(0) * s(0));
}

inline double H(const Vec3& s, int n) { return s(0) * std::pow(s(1), n); }

/// Central-difference gradient of a scalar function.
template <typename F>
Vec3 fd_gradient(F f, const Vec3& s, double h = 1e-6) {
  Vec3 g;
  for (int i = 0; i < 3; ++i) {
    Vec3 a = s, b = s;
    a(i) += h;
    b(i) -= h;
    g(i) = (f(a) - f(b)) / (2 * h);
  }
  return g;
}

/// Unimodular matrix built from a random rotation-free product
/// [[1, u], [0, 1]] [[1, 0], [v, 1]] [[w, 0], [0, 1/w]].
struct Unimodular {
  double a, b, c, d;
};

inline Unimodular random_unimodular(Sampler& rng) {
  const double u = rng.uniform(-2, 2), v = rng.uniform(-2, 2);
  double w = rng.uniform(0.5, 2.0);
  if (rng.uniform(0, 1) < 0.5) w = -w;
  // [[1 + u v, u], [v, 1]] * diag(w, 1/w)
  return {(1 + u * v) * w, u / w, v * w, 1 / w};
}

// Damped minimum-norm Gauss-Newton on (H - h, C - c) = 0. Returns true when
// the residual drops below 1e-10.
inline bool newton_reaches(double h, double c, Vec3 s, int n) {
  auto residual = [&](const Vec3& v) {
    return Eigen::Vector2d(v(0) * std::pow(v(1), n) - h, 0.5 * v.squaredNorm() - c);
  };
  Eigen::Vector2d r = residual(s);
  for (int it = 0; it < 100; ++it) {
    if (r.norm() < 1e-10) return true;
    Eigen::Matrix<double, 2, 3> J;
    J << std::pow(s(1), n), n * s(0) * std::pow(s(1), n - 1), 0, s(0), s(1), s(2);
    const Eigen::Matrix2d JJt = J * J.transpose();
    if (std::abs(JJt.determinant()) < 1e-300) return false;
    const Vec3 step = J.transpose() * JJt.ldlt().solve(r);
    double t = 1.0;
    for (; t > 1e-6; t *= 0.5) {
      const Vec3 trial = s - t * step;
      const Eigen::Vector2d rt = residual(trial);
      if (rt.norm() < r.norm()) {
        s = trial;
        r = rt;
        break;
      }
    }
    if (t <= 1e-6) return r.norm() < 1e-10;
  }
  return r.norm() < 1e-10;
}

}  // namespace oracle

}  // namespace rbtest
