#pragma once

#include <array>
#include <span>

#include "rattleback/core_model.hpp"

namespace rattleback {

/// Antisymmetric pair with L' = [L, B] = LB - BL along the rattleback flow.
template <typename Scalar>
struct LaxPair {
  Matrix3<Scalar> L;
  Matrix3<Scalar> B;
};

namespace detail {

template <typename Scalar>
Matrix3<Scalar> antisymmetric(const Scalar& e12, const Scalar& e13,
                              const Scalar& e23) {
  Matrix3<Scalar> m;
  m << Scalar(0), e12, e13,
       -e12, Scalar(0), e23,
       -e13, -e23, Scalar(0);
  return m;
}

}  // namespace detail

template <typename Derived>
LaxPair<typename Derived::Scalar> lax_matrices(
    const Eigen::MatrixBase<Derived>& s, const ModelParams& p) {
  using Scalar = typename Derived::Scalar;
  using std::sqrt;
  const Scalar r = sqrt(Scalar(p.lambda()));
  const Scalar r1 = sqrt(Scalar(p.lambda() + 1.0));
  const Scalar x = s(0), y = s(1), z = s(2);
  return {detail::antisymmetric<Scalar>(-x + y * r, x * r + y, z * r1),
          detail::antisymmetric<Scalar>((-x * r + y) * r1, Scalar(0), z * r)};
}

/// Time derivative of L along the flow, by the chain rule on its entries.
template <typename Derived>
Matrix3<typename Derived::Scalar> lax_derivative(
    const Eigen::MatrixBase<Derived>& s, const ModelParams& p) {
  using Scalar = typename Derived::Scalar;
  using std::sqrt;
  const Scalar r = sqrt(Scalar(p.lambda()));
  const Scalar r1 = sqrt(Scalar(p.lambda() + 1.0));
  const State3<Scalar> v = rhs(s, p);
  return detail::antisymmetric<Scalar>(-v(0) + v(1) * r, v(0) * r + v(1), v(2) * r1);
}

/// max |L' - [L, B]| over entries. Should stay below 1e-12 (1 + |s|^3).
double lax_residual(const Vec3& s, const ModelParams& p);

struct IsospectralInvariants {
  double trace_L2 = 0.0;
  std::array<double, 3> eig_abs{};  // sorted ascending: {0, w, w}
};

/// Spectrum of the antisymmetric L is {0, +-i w}, w^2 = L12^2 + L13^2 + L23^2.
IsospectralInvariants isospectral_invariants(const Vec3& s, const ModelParams& p);

struct LaxCheck {
  double max_scaled_residual = 0.0;  // max residual / (1 + |s|^3)
  double max_residual = 0.0;
  double trace_drift = 0.0;          // max |tr L^2 - tr L^2(first)|
  double eig_drift = 0.0;            // max abs deviation of eig_abs entries
  std::size_t samples = 0;
};

/// Residual and isospectral drift over a sequence of states.
LaxCheck lax_check(std::span<const Vec3> states, const ModelParams& p);

}  // namespace rattleback
