#pragma once

#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

#include "rattleback/core_model.hpp"
#include "rattleback/ec_map.hpp"
#include "rattleback/integrate.hpp"

namespace rattleback {

enum class PerturbationKind { EquilibriaPlus, EquilibriaMinus, PeriodicOrbit, Heteroclinic };

std::string_view to_string(PerturbationKind kind);

/// Which conservative perturbation to apply and its parameters.
///
/// EquilibriaPlus / EquilibriaMinus and Heteroclinic need M; PeriodicOrbit
/// needs h for the field and additionally c for its Lyapunov function and
/// for convergence runs.
struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::Heteroclinic;
  double epsilon = 1.0;
  std::optional<double> M;
  std::optional<double> h;
  std::optional<double> c;

  void validate() const;
};

/// Direction common to every perturbation,
///   (H - h) y^(lambda-1) (y(lambda x^2 - y^2 - z^2), x(-lambda x^2 + y^2 - lambda z^2),
///                         (lambda+1) x y z)
/// = (H - h) grad C x (grad C x grad H).
template <typename Derived>
State3<typename Derived::Scalar> skeleton_field(const Eigen::MatrixBase<Derived>& s,
                                                const ModelParams& p, double h) {
  using Scalar = typename Derived::Scalar;
  const int n = p.integer_lambda();
  const Scalar lam(p.lambda());
  const Scalar x = s(0), y = s(1), z = s(2);
  const Scalar gain = (hamiltonian(s, p) - Scalar(h)) * ipow(y, n - 1);
  return gain * State3<Scalar>(y * (lam * x * x - y * y - z * z),
                               x * (-lam * x * x + y * y - lam * z * z),
                               (lam + Scalar(1)) * x * y * z);
}

/// |M|^(lambda+1) sqrt(lambda)^lambda, the energy |H| of e+-^|M|.
double equilibrium_energy(double M, const ModelParams& p);

/// Energy level that the perturbation drives H toward.
double target_energy(const PerturbationSpec& spec, const ModelParams& p);

/// Casimir level the run lives on: (lambda+1) M^2 / 2, M^2 / 2 or c.
double target_casimir(const PerturbationSpec& spec, const ModelParams& p);

/// rhs(s) + epsilon g(s) D(s), with D the bracket of skeleton_field and
///   g = (H +- |M|^(lambda+1) sqrt(lambda)^lambda) y^(lambda-1)   (EquilibriaPlus/Minus)
///   g = (H - h) y^(lambda-1)                                    (PeriodicOrbit)
///   g = x y^(2 lambda - 1)                                      (Heteroclinic)
Vec3 perturbed_field(const PerturbationSpec& spec, const Vec3& s, const ModelParams& p);

VectorField make_perturbed_field(const PerturbationSpec& spec, const ModelParams& p);

/// [C - C*]^2 + [H - H*]^2, or x^2 y^(2 lambda) for the heteroclinic case.
double lyapunov_value(const PerturbationSpec& spec, const Vec3& s, const ModelParams& p);

Vec3 lyapunov_gradient(const PerturbationSpec& spec, const Vec3& s, const ModelParams& p);

struct LieDerivative {
  double numeric = 0.0;                // grad V . perturbed_field
  std::optional<double> closed_form;   // -2 eps y^(2(lambda-1)) (H - H*)^2 |...|
};

/// Derivative of the Lyapunov function along the perturbed field, with the
/// factored closed form. Every kind is the same identity with its own target
/// energy (0 for the heteroclinic case).
LieDerivative lie_derivative_check(const PerturbationSpec& spec, const Vec3& s,
                                   const ModelParams& p);

/// M^(2(lambda+1)) lambda^lambda / (lambda+1)^(lambda+1); Lyapunov levels
/// below it keep heteroclinic runs away from the stable equilibria.
double beta0(double M, const ModelParams& p);

/// Equilibrium pair that the perturbation stabilizes.
std::vector<Equilibrium> target_equilibria(const PerturbationSpec& spec,
                                           const ModelParams& p);

struct ConvergenceRecord {
  std::vector<double> times;
  std::vector<double> dist_to_target;
  std::vector<double> lyapunov_values;
  double casimir_drift = 0.0;
  long monotone_violations = 0;  // steps where V rose by more than 1e-10
  double max_lyapunov_increase = 0.0;
  Vec3 initial_state = Vec3::Zero();
  Vec3 final_state = Vec3::Zero();
  double final_distance = 0.0;
};

/// Projects s0 radially onto the target Casimir sphere and integrates the
/// perturbed field, recording distance to the target set and the Lyapunov
/// function.
///
/// The target set is the predicted equilibrium pair, the traced fiber (h, c),
/// or the heteroclinic set {x = 0} u {y = 0} on the sphere.
///
/// Throws BasinViolation when the projected start is outside the region the
/// stabilization applies to or a periodic-orbit run reaches y = 0.
ConvergenceRecord run_convergence(const PerturbationSpec& spec, const Vec3& s0,
                                  const IntegratorConfig& cfg, const ModelParams& p);

/// CSV with header t,dist_to_target,lyapunov.
void write_convergence_csv(std::ostream& out, const ConvergenceRecord& rec);

}  // namespace rattleback
