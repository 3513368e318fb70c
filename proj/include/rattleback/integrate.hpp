#pragma once

#include <array>
#include <complex>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "rattleback/core_model.hpp"

namespace rattleback {

using VectorField = std::function<Vec3(const Vec3&)>;

/// The unperturbed rattleback field as an integrable handle.
VectorField rattleback_field(const ModelParams& p);

enum class Method { RK4Fixed, RK45Adaptive };

struct IntegratorConfig {
  Method method = Method::RK4Fixed;
  double step = 1e-3;  // fixed step, or the initial trial step when adaptive
  double tol_abs = 1e-10;
  double tol_rel = 1e-10;
  double t_end = 1.0;
  int record_every = 1;  // keep every n-th accepted step (the last is always kept)

  void validate() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec3> states;
  std::optional<double> drift_H;  // set when lambda is an integer
  double drift_C = 0.0;
};

/// Called on every accepted step, including t = 0.
using StepObserver = std::function<void(double t, const Vec3& s)>;

/// Integrates s' = field(s) from t = 0 to cfg.t_end.
///
/// Drift of H and C is the largest absolute deviation from the initial value
/// over every accepted step, not only the recorded ones.
///
/// Throws StepUnderflow when the adaptive step falls below 1e-14 and
/// NonFinite when the state overflows.
Trajectory integrate(const Vec3& s0, const VectorField& field,
                     const IntegratorConfig& cfg, const ModelParams& p,
                     const StepObserver& observer = {});

/// Oriented section plane {normal . s = offset}; crossings are counted where
/// normal . s goes from negative to non-negative.
struct Section {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
};

/// Upward crossing times of the section, refined by cubic Hermite
/// interpolation between stored samples and a bracketed secant iteration.
/// Throws NoCrossings when fewer than two crossings exist.
std::vector<double> section_crossings(const Trajectory& traj,
                                      const VectorField& field,
                                      const Section& section = {});

struct PeriodMeasurement {
  double M = 0.0;
  double amplitude = 0.0;
  double measured_period = 0.0;
  double period_stddev = 0.0;
  int crossings = 0;
  double predicted_limit = 0.0;
};

/// pi sqrt(2) / (|M| sqrt(lambda (lambda + 1))), the small-amplitude limit of
/// the period of orbits around e+-^|M|.
double predicted_period_limit(double M, const ModelParams& p);

/// Eigenvalues of the linearization at e+^|M| restricted to the tangent plane
/// of its Casimir sphere.
std::array<std::complex<double>, 2> leaf_linearization_eigenvalues(
    double M, const ModelParams& p);

/// Starts a distance `amplitude` from e+^|M| along z, projects back onto the
/// sphere C = (lambda + 1) M^2 / 2, and averages at least eight consecutive
/// return times to z = 0.
PeriodMeasurement measure_small_period(double M, double amplitude,
                                       const ModelParams& p);

/// CSV with header t,x,y,z,H,C (H is nan for non-integer lambda).
void write_trajectory_csv(std::ostream& out, const Trajectory& traj,
                          const ModelParams& p);

}  // namespace rattleback
