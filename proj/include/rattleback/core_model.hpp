#pragma once

// Vector field, first integrals, Poisson structures and equilibria of the
// conservative rattleback system
//
//   x' = lambda x z,   y' = -y z,   z' = y^2 - lambda x^2.
//
// The field, the integrals and the structure matrices are templates on the
// Eigen scalar so they can be evaluated in double, long double or with
// automatic-differentiation scalars.

#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rattleback/errors.hpp"

namespace rattleback {

template <typename Scalar>
using State3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

using Vec3 = State3<double>;
using Mat3 = Matrix3<double>;

/// The aspect parameter lambda.
///
/// Any finite lambda > 0 is accepted. The integer flag is set when lambda is an
/// integer >= 2; the Hamiltonian x*y^lambda (and everything built on it) is
/// only defined on all of R^3 in that case.
class ModelParams {
 public:
  explicit ModelParams(double lambda);

  double lambda() const noexcept { return lambda_; }
  bool lambda_is_integer() const noexcept { return is_integer_; }

  /// lambda as an int; throws NonIntegerLambda when the flag is not set.
  int integer_lambda() const;

 private:
  double lambda_;
  bool is_integer_;
};

/// base^exp for a non-negative integer exponent (exact sign handling for
/// negative bases).
template <typename Scalar>
Scalar ipow(Scalar base, int exp) {
  Scalar result(1);
  while (exp > 0) {
    if (exp & 1) result *= base;
    base *= base;
    exp >>= 1;
  }
  return result;
}

template <typename Derived>
State3<typename Derived::Scalar> rhs(const Eigen::MatrixBase<Derived>& s,
                                     const ModelParams& p) {
  using Scalar = typename Derived::Scalar;
  const Scalar lam(p.lambda());
  const Scalar x = s(0), y = s(1), z = s(2);
  return State3<Scalar>(lam * x * z, -y * z, y * y - lam * x * x);
}

/// H = x y^lambda.
template <typename Derived>
typename Derived::Scalar hamiltonian(const Eigen::MatrixBase<Derived>& s,
                                     const ModelParams& p) {
  return s(0) * ipow(s(1), p.integer_lambda());
}

/// C = (x^2 + y^2 + z^2) / 2.
template <typename Derived>
typename Derived::Scalar casimir(const Eigen::MatrixBase<Derived>& s) {
  return typename Derived::Scalar(0.5) * s.squaredNorm();
}

template <typename Derived>
State3<typename Derived::Scalar> grad_hamiltonian(
    const Eigen::MatrixBase<Derived>& s, const ModelParams& p) {
  using Scalar = typename Derived::Scalar;
  const int n = p.integer_lambda();
  const Scalar y_nm1 = ipow(Scalar(s(1)), n - 1);
  return State3<Scalar>(y_nm1 * s(1), Scalar(n) * s(0) * y_nm1, Scalar(0));
}

template <typename Derived>
State3<typename Derived::Scalar> grad_casimir(
    const Eigen::MatrixBase<Derived>& s) {
  return s.eval();
}

template <typename Derived>
Matrix3<typename Derived::Scalar> hessian_hamiltonian(
    const Eigen::MatrixBase<Derived>& s, const ModelParams& p) {
  using Scalar = typename Derived::Scalar;
  const int n = p.integer_lambda();
  const Scalar x = s(0), y = s(1);
  const Scalar hxy = Scalar(n) * ipow(y, n - 1);
  const Scalar hyy = Scalar(n) * Scalar(n - 1) * x * ipow(y, n - 2);
  Matrix3<Scalar> hess = Matrix3<Scalar>::Zero();
  hess(0, 1) = hxy;
  hess(1, 0) = hxy;
  hess(1, 1) = hyy;
  return hess;
}

/// Poisson tensor generated by C: Pi_C(s) v = v x grad C.
template <typename Derived>
Matrix3<typename Derived::Scalar> poisson_matrix(
    const Eigen::MatrixBase<Derived>& s) {
  using Scalar = typename Derived::Scalar;
  const Scalar x = s(0), y = s(1), z = s(2);
  Matrix3<Scalar> pi;
  pi << Scalar(0), z, -y,
        -z, Scalar(0), x,
        y, -x, Scalar(0);
  return pi;
}

/// Rescaling nu = y^(1 - lambda); undefined on the plane y = 0.
template <typename Derived>
typename Derived::Scalar rescale_nu(const Eigen::MatrixBase<Derived>& s,
                                    const ModelParams& p) {
  using Scalar = typename Derived::Scalar;
  const int n = p.integer_lambda();
  if (s(1) == Scalar(0)) {
    throw Error(ErrorCode::SingularPlane, "rescaling nu is undefined at y = 0");
  }
  return Scalar(1) / ipow(Scalar(s(1)), n - 1);
}

/// nu * Pi_C * grad H, which reproduces rhs() off the plane y = 0.
template <typename Derived>
State3<typename Derived::Scalar> hamiltonian_field(
    const Eigen::MatrixBase<Derived>& s, const ModelParams& p) {
  const auto nu = rescale_nu(s, p);
  return nu * (poisson_matrix(s) * grad_hamiltonian(s, p));
}

/// Coefficients of a unimodular 2x2 matrix [[a, b], [c, d]] selecting the
/// Casimir C_ab = a C + b H and Hamiltonian H_cd = c C + d H.
struct RealizationParams {
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;
  double d = 1.0;

  double determinant() const { return a * d - b * c; }

  /// Throws NotUnimodular when |ad - bc - 1| > 1e-12.
  void validate() const;
};

/// Structure matrix of the bracket generated by C_ab.
template <typename Derived>
Matrix3<typename Derived::Scalar> family_poisson_matrix(
    const Eigen::MatrixBase<Derived>& s, const ModelParams& p,
    const RealizationParams& r) {
  using Scalar = typename Derived::Scalar;
  const int n = p.integer_lambda();
  const Scalar x = s(0), y = s(1), z = s(2);
  const Scalar a(r.a), b(r.b);
  const Scalar y_nm1 = ipow(y, n - 1);
  const Scalar e13 = -a * y - Scalar(n) * b * x * y_nm1;
  const Scalar e23 = a * x + b * y_nm1 * y;
  Matrix3<Scalar> pi;
  pi << Scalar(0), a * z, e13,
        -a * z, Scalar(0), e23,
        -e13, -e23, Scalar(0);
  return pi;
}

/// nu * Pi_ab * grad H_cd; equals rhs() for every unimodular r.
///
/// Pi_ab = a Pi_C + b Pi_H and grad H_cd = c grad C + d grad H are expanded
/// by bilinearity. Pi_C grad C and Pi_H grad H are then exactly zero in
/// floating point, whereas the plain product leaves an O(eps |s|^2) remainder
/// that nu = y^(1-lambda) amplifies near y = 0.
template <typename Derived>
State3<typename Derived::Scalar> family_field(
    const Eigen::MatrixBase<Derived>& s, const ModelParams& p,
    const RealizationParams& r) {
  using Scalar = typename Derived::Scalar;
  r.validate();
  const auto nu = rescale_nu(s, p);
  const Matrix3<Scalar> pi_c = family_poisson_matrix(s, p, {1, 0, 0, 1});
  const Matrix3<Scalar> pi_h = family_poisson_matrix(s, p, {0, 1, -1, 0});
  const State3<Scalar> gc = grad_casimir(s);
  const State3<Scalar> gh = grad_hamiltonian(s, p);
  // Products are evaluated before scaling: Eigen would otherwise fold the
  // scalar into the matrix and spoil the exact cancellation.
  const State3<Scalar> cc = pi_c * gc, ch = pi_c * gh, hc = pi_h * gc, hh = pi_h * gh;
  const State3<Scalar> sum = Scalar(r.a * r.c) * cc + Scalar(r.a * r.d) * ch +
                             Scalar(r.b * r.c) * hc + Scalar(r.b * r.d) * hh;
  return nu * sum;
}

template <typename Derived>
Matrix3<typename Derived::Scalar> jacobian(const Eigen::MatrixBase<Derived>& s,
                                           const ModelParams& p) {
  using Scalar = typename Derived::Scalar;
  const Scalar lam(p.lambda());
  const Scalar x = s(0), y = s(1), z = s(2);
  Matrix3<Scalar> jac;
  jac << lam * z, Scalar(0), lam * x,
         Scalar(0), -z, -y,
         Scalar(-2) * lam * x, Scalar(2) * y, Scalar(0);
  return jac;
}

enum class EquilibriumKind { StablePlus, StableMinus, Origin, SpinAxis };

/// One point of the equilibrium set: e+^M = (M, M sqrt(lambda), 0),
/// e-^M = (M, -M sqrt(lambda), 0), e3^M = (0, 0, M), or the origin.
struct Equilibrium {
  EquilibriumKind kind;
  Vec3 point;
  double M;
};

Equilibrium make_equilibrium(EquilibriumKind kind, double M,
                             const ModelParams& p);

/// For each M: e-^M, e+^M, e3^M; M = 0 collapses to a single origin entry,
/// emitted once for the whole list.
std::vector<Equilibrium> equilibria(std::span<const double> M_list,
                                    const ModelParams& p);

enum class Verdict { LyapunovStable, Unstable };

/// Second variation of F = C - mu H restricted to ker dH(e), in the fixed
/// basis {(-+sqrt(lambda), 1, 0), (0, 0, 1)}.
struct ArnoldReport {
  double mu;
  std::array<Vec3, 2> kernel_basis;
  Eigen::Matrix2d restricted_hessian;
  bool positive_definite;
};

struct StabilityReport {
  Verdict verdict;
  std::array<std::complex<double>, 3> spectrum;  // of the Jacobian, sorted
  std::optional<ArnoldReport> arnold;
};

/// Spectrum of the linearization plus a stability verdict. Stable verdicts
/// come from the Arnold test (e+-) or the Casimir (origin); instability of the
/// spin axis comes from a positive eigenvalue.
StabilityReport classify_equilibrium(const Equilibrium& e,
                                     const ModelParams& p);

ArnoldReport arnold_report(const Equilibrium& e, const ModelParams& p);

std::string_view to_string(EquilibriumKind kind);
std::string_view to_string(Verdict verdict);

}  // namespace rattleback
