#include "rattleback/stabilize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rattleback/format.hpp"

namespace rattleback {

namespace {

constexpr double kMonotoneSlack = 1e-10;

double required(const std::optional<double>& v, const char* name) {
  if (!v) throw Error(ErrorCode::ParamMissing, std::string("perturbation needs ") + name);
  return *v;
}

bool needs_M(PerturbationKind k) { return k != PerturbationKind::PeriodicOrbit; }

double distance_to_heteroclinic_set(const Vec3& s, double r) {
  const double to_x0 = std::hypot(s(0), r - std::hypot(s(1), s(2)));
  const double to_y0 = std::hypot(s(1), r - std::hypot(s(0), s(2)));
  return std::min(to_x0, to_y0);
}

}  // namespace

std::string_view to_string(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::EquilibriaPlus: return "EquilibriaPlus";
    case PerturbationKind::EquilibriaMinus: return "EquilibriaMinus";
    case PerturbationKind::PeriodicOrbit: return "PeriodicOrbit";
    case PerturbationKind::Heteroclinic: return "Heteroclinic";
  }
  return "Unknown";
}

void PerturbationSpec::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::InvalidArgument, "epsilon must be positive and finite");
  }
  if (needs_M(kind)) {
    const double m = required(M, "M");
    if (m == 0.0 || !std::isfinite(m)) {
      throw Error(ErrorCode::InvalidArgument, "M must be finite and nonzero");
    }
  } else {
    const double hv = required(h, "h");
    if (!std::isfinite(hv)) throw Error(ErrorCode::InvalidArgument, "h must be finite");
    if (c && !(std::isfinite(*c) && *c > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "c must be positive and finite");
    }
  }
}

double equilibrium_energy(double M, const ModelParams& p) {
  const int n = p.integer_lambda();
  const double m = std::abs(M);
  return ipow(m, n + 1) * std::pow(std::sqrt(p.lambda()), n);
}

double target_energy(const PerturbationSpec& spec, const ModelParams& p) {
  spec.validate();
  switch (spec.kind) {
    case PerturbationKind::EquilibriaPlus: return -equilibrium_energy(*spec.M, p);
    case PerturbationKind::EquilibriaMinus: return equilibrium_energy(*spec.M, p);
    case PerturbationKind::PeriodicOrbit: return *spec.h;
    case PerturbationKind::Heteroclinic: return 0.0;
  }
  return 0.0;
}

double target_casimir(const PerturbationSpec& spec, const ModelParams& p) {
  spec.validate();
  switch (spec.kind) {
    case PerturbationKind::EquilibriaPlus:
    case PerturbationKind::EquilibriaMinus:
      return 0.5 * (p.lambda() + 1.0) * *spec.M * *spec.M;
    case PerturbationKind::PeriodicOrbit: return required(spec.c, "c");
    case PerturbationKind::Heteroclinic: return 0.5 * *spec.M * *spec.M;
  }
  return 0.0;
}

// Every gain g is (H - H*) y^(lambda-1) for its target energy H*; the
// heteroclinic x y^(2 lambda - 1) is the case H* = 0.
Vec3 perturbed_field(const PerturbationSpec& spec, const Vec3& s, const ModelParams& p) {
  const double target = target_energy(spec, p);
  return rhs(s, p) + spec.epsilon * skeleton_field(s, p, target);
}

VectorField make_perturbed_field(const PerturbationSpec& spec, const ModelParams& p) {
  const double target = target_energy(spec, p);
  const double eps = spec.epsilon;
  return [p, target, eps](const Vec3& s) -> Vec3 {
    return rhs(s, p) + eps * skeleton_field(s, p, target);
  };
}

double lyapunov_value(const PerturbationSpec& spec, const Vec3& s, const ModelParams& p) {
  if (spec.kind == PerturbationKind::Heteroclinic) {
    spec.validate();
    const double H = hamiltonian(s, p);
    return H * H;
  }
  const double dC = casimir(s) - target_casimir(spec, p);
  const double dH = hamiltonian(s, p) - target_energy(spec, p);
  return dC * dC + dH * dH;
}

Vec3 lyapunov_gradient(const PerturbationSpec& spec, const Vec3& s, const ModelParams& p) {
  const Vec3 gH = grad_hamiltonian(s, p);
  if (spec.kind == PerturbationKind::Heteroclinic) {
    spec.validate();
    return 2.0 * hamiltonian(s, p) * gH;
  }
  const double dC = casimir(s) - target_casimir(spec, p);
  const double dH = hamiltonian(s, p) - target_energy(spec, p);
  return 2.0 * dC * s + 2.0 * dH * gH;
}

LieDerivative lie_derivative_check(const PerturbationSpec& spec, const Vec3& s,
                                   const ModelParams& p) {
  LieDerivative out;
  out.numeric = lyapunov_gradient(spec, s, p).dot(perturbed_field(spec, s, p));
  const int n = p.integer_lambda();
  const double lam = p.lambda();
  const double x = s(0), y = s(1), z = s(2);
  const double dH = hamiltonian(s, p) - target_energy(spec, p);
  const double bracket = lam * lam * x * x * z * z + y * y * z * z +
                         (y * y - lam * x * x) * (y * y - lam * x * x);
  out.closed_form = -2.0 * spec.epsilon * ipow(y, 2 * (n - 1)) * dH * dH * bracket;
  return out;
}

double beta0(double M, const ModelParams& p) {
  const int n = p.integer_lambda();
  const double lam = p.lambda();
  return ipow(M * M, n + 1) * ipow(lam, n) / ipow(lam + 1.0, n + 1);
}

std::vector<Equilibrium> target_equilibria(const PerturbationSpec& spec,
                                           const ModelParams& p) {
  if (spec.kind != PerturbationKind::EquilibriaPlus &&
      spec.kind != PerturbationKind::EquilibriaMinus) {
    throw Error(ErrorCode::InvalidArgument, "target equilibria need an Equilibria kind");
  }
  return stable_equilibria_for(ECValue{target_energy(spec, p), target_casimir(spec, p)}, p);
}

ConvergenceRecord run_convergence(const PerturbationSpec& spec, const Vec3& s0,
                                  const IntegratorConfig& cfg, const ModelParams& p) {
  spec.validate();
  cfg.validate();
  if (!s0.allFinite() || s0.squaredNorm() == 0.0) {
    throw Error(ErrorCode::InvalidArgument, "initial state must be finite and nonzero");
  }
  const double c_target = target_casimir(spec, p);
  const double radius = std::sqrt(2.0 * c_target);
  const Vec3 start = s0 * (radius / s0.norm());

  std::vector<Equilibrium> targets;
  FiberTrace fiber;
  switch (spec.kind) {
    case PerturbationKind::EquilibriaPlus:
    case PerturbationKind::EquilibriaMinus:
      if (start(1) == 0.0) {
        throw Error(ErrorCode::BasinViolation, "y = 0 is invariant; start off that plane");
      }
      targets = target_equilibria(spec, p);
      break;
    case PerturbationKind::PeriodicOrbit: {
      const Stratum st = classify_value(ECValue{*spec.h, c_target}, p);
      if (st != Stratum::SigmaPMinus && st != Stratum::SigmaPPlus) {
        throw Error(ErrorCode::BasinViolation, "(h, c) is not a periodic-orbit value");
      }
      if (start(1) == 0.0) {
        throw Error(ErrorCode::BasinViolation, "periodic-orbit runs must start with y != 0");
      }
      fiber = trace_fiber(ECValue{*spec.h, c_target}, p, 1e-3);
      break;
    }
    case PerturbationKind::Heteroclinic:
      if (lyapunov_value(spec, start, p) >= beta0(*spec.M, p)) {
        throw Error(ErrorCode::BasinViolation, "start is outside the x^2 y^(2 lambda) < beta0 basin");
      }
      break;
  }

  auto distance = [&](const Vec3& s) {
    switch (spec.kind) {
      case PerturbationKind::PeriodicOrbit: return distance_to_fiber(fiber, s);
      case PerturbationKind::Heteroclinic: return distance_to_heteroclinic_set(s, radius);
      default: {
        double best = std::numeric_limits<double>::infinity();
        for (const Equilibrium& e : targets) best = std::min(best, (s - e.point).norm());
        return best;
      }
    }
  };

  ConvergenceRecord rec;
  double v_prev = lyapunov_value(spec, start, p);
  const double y_sign = start(1) > 0.0 ? 1.0 : -1.0;
  auto observer = [&](double, const Vec3& s) {
    if (spec.kind == PerturbationKind::PeriodicOrbit && y_sign * s(1) <= 0.0) {
      throw Error(ErrorCode::BasinViolation, "periodic-orbit run reached y = 0");
    }
    const double v = lyapunov_value(spec, s, p);
    const double rise = v - v_prev;
    rec.max_lyapunov_increase = std::max(rec.max_lyapunov_increase, rise);
    if (rise > kMonotoneSlack) ++rec.monotone_violations;
    v_prev = v;
  };

  const Trajectory traj = integrate(start, make_perturbed_field(spec, p), cfg, p, observer);
  rec.times = traj.times;
  rec.dist_to_target.reserve(traj.states.size());
  rec.lyapunov_values.reserve(traj.states.size());
  for (const Vec3& s : traj.states) {
    rec.dist_to_target.push_back(distance(s));
    rec.lyapunov_values.push_back(lyapunov_value(spec, s, p));
  }
  rec.casimir_drift = traj.drift_C;
  rec.initial_state = start;
  rec.final_state = traj.states.back();
  rec.final_distance = rec.dist_to_target.back();
  return rec;
}

void write_convergence_csv(std::ostream& out, const ConvergenceRecord& rec) {
  out << "t,dist_to_target,lyapunov\n";
  for (std::size_t i = 0; i < rec.times.size(); ++i) {
    out << fmt17(rec.times[i]) << ',' << fmt17(rec.dist_to_target[i]) << ','
        << fmt17(rec.lyapunov_values[i]) << '\n';
  }
}

}  // namespace rattleback
