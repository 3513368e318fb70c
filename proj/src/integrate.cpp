#include "rattleback/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "rattleback/format.hpp"

namespace rattleback {

namespace {

constexpr double kMinStep = 1e-14;
constexpr double kSectionTol = 1e-12;

bool finite(const Vec3& s) { return s.allFinite(); }

Vec3 rk4_step(const VectorField& f, const Vec3& s, double h) {
  const Vec3 k1 = f(s);
  const Vec3 k2 = f(s + 0.5 * h * k1);
  const Vec3 k3 = f(s + 0.5 * h * k2);
  const Vec3 k4 = f(s + h * k3);
  return s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Dormand-Prince 5(4) tableau.
namespace dp {
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
}  // namespace dp

class InvariantMonitor {
 public:
  InvariantMonitor(const Vec3& s0, const ModelParams& p)
      : params_(p), has_h_(p.lambda_is_integer()), c0_(casimir(s0)) {
    if (has_h_) h0_ = hamiltonian(s0, p);
  }

  void observe(const Vec3& s) {
    drift_c_ = std::max(drift_c_, std::abs(casimir(s) - c0_));
    if (has_h_) drift_h_ = std::max(drift_h_, std::abs(hamiltonian(s, params_) - h0_));
  }

  void finish(Trajectory& traj) const {
    traj.drift_C = drift_c_;
    if (has_h_) traj.drift_H = drift_h_;
  }

 private:
  const ModelParams& params_;
  bool has_h_;
  double c0_;
  double h0_ = 0.0;
  double drift_c_ = 0.0;
  double drift_h_ = 0.0;
};

[[noreturn]] void throw_non_finite(double t) {
  throw Error(ErrorCode::NonFinite,
              "state left the finite range near t = " + std::to_string(t));
}

}  // namespace

VectorField rattleback_field(const ModelParams& p) {
  return [p](const Vec3& s) -> Vec3 { return rhs(s, p); };
}

void IntegratorConfig::validate() const {
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw Error(ErrorCode::InvalidArgument, "integrator step must be positive");
  }
  if (!(tol_abs > 0.0) || !(tol_rel > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "tolerances must be positive");
  }
  if (!(t_end > 0.0) || !std::isfinite(t_end)) {
    throw Error(ErrorCode::InvalidArgument, "t_end must be a positive real");
  }
  if (record_every < 1) {
    throw Error(ErrorCode::InvalidArgument, "record_every must be >= 1");
  }
}

Trajectory integrate(const Vec3& s0, const VectorField& field,
                     const IntegratorConfig& cfg, const ModelParams& p,
                     const StepObserver& observer) {
  cfg.validate();
  if (!finite(s0)) throw Error(ErrorCode::InvalidArgument, "initial state must be finite");

  Trajectory traj;
  InvariantMonitor monitor(s0, p);
  traj.times.push_back(0.0);
  traj.states.push_back(s0);
  if (observer) observer(0.0, s0);

  long accepted = 0;
  auto accept = [&](double t, const Vec3& s, bool last) {
    if (!finite(s)) throw_non_finite(t);
    ++accepted;
    monitor.observe(s);
    if (observer) observer(t, s);
    if (last || accepted % cfg.record_every == 0) {
      traj.times.push_back(t);
      traj.states.push_back(s);
    }
  };

  Vec3 s = s0;
  if (cfg.method == Method::RK4Fixed) {
    const double ratio = cfg.t_end / cfg.step;
    const long n = std::max(1L, static_cast<long>(std::ceil(ratio - 1e-9)));
    double t = 0.0;
    for (long i = 1; i <= n; ++i) {
      const double t_next = (i == n) ? cfg.t_end : static_cast<double>(i) * cfg.step;
      s = rk4_step(field, s, t_next - t);
      t = t_next;
      accept(t, s, i == n);
    }
  } else {
    using namespace dp;
    double t = 0.0;
    double h = std::min(cfg.step, cfg.t_end);
    Vec3 k1 = field(s);
    while (t < cfg.t_end) {
      bool last = false;
      if (t + h >= cfg.t_end) {
        h = cfg.t_end - t;
        last = true;
      }
      const Vec3 k2 = field(s + h * (a21 * k1));
      const Vec3 k3 = field(s + h * (a31 * k1 + a32 * k2));
      const Vec3 k4 = field(s + h * (a41 * k1 + a42 * k2 + a43 * k3));
      const Vec3 k5 = field(s + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      const Vec3 k6 =
          field(s + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      const Vec3 next =
          s + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const Vec3 k7 = field(next);
      const Vec3 err =
          h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      double norm = 0.0;
      for (int i = 0; i < 3; ++i) {
        const double scale =
            cfg.tol_abs + cfg.tol_rel * std::max(std::abs(s(i)), std::abs(next(i)));
        norm = std::max(norm, std::abs(err(i)) / scale);
      }
      // std::max drops NaN, so test the candidate and error estimate directly.
      if (!std::isfinite(norm) || !finite(next) || !finite(err)) norm = 1e10;

      if (norm <= 1.0) {
        t = last ? cfg.t_end : t + h;
        s = next;
        k1 = k7;
        accept(t, s, last);
        if (last) break;
      }
      const double factor =
          norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
      h *= norm <= 1.0 ? factor : std::min(factor, 1.0);
      if (h < kMinStep) {
        throw Error(ErrorCode::StepUnderflow,
                    "adaptive step fell below 1e-14 at t = " + std::to_string(t));
      }
    }
  }

  monitor.finish(traj);
  return traj;
}

std::vector<double> section_crossings(const Trajectory& traj,
                                      const VectorField& field,
                                      const Section& section) {
  std::vector<double> out;
  const auto& ts = traj.times;
  const auto& ss = traj.states;
  auto g = [&](const Vec3& s) { return section.normal.dot(s) - section.offset; };

  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    const double g0 = g(ss[i]);
    const double g1 = g(ss[i + 1]);
    if (!(g0 < 0.0 && g1 >= 0.0)) continue;

    // Cubic Hermite interpolant of g on [t0, t1] in the unit variable u.
    const double t0 = ts[i];
    const double dt = ts[i + 1] - t0;
    const double d0 = section.normal.dot(field(ss[i])) * dt;
    const double d1 = section.normal.dot(field(ss[i + 1])) * dt;
    auto hermite = [&](double u) {
      const double u2 = u * u, u3 = u2 * u;
      return (2 * u3 - 3 * u2 + 1) * g0 + (u3 - 2 * u2 + u) * d0 +
             (-2 * u3 + 3 * u2) * g1 + (u3 - u2) * d1;
    };

    // Illinois-modified secant (regula falsi) keeps the root bracketed.
    double a = 0.0, b = 1.0, fa = g0, fb = g1;
    double u = (g1 == 0.0) ? 1.0 : 0.0;
    int side = 0;
    if (g1 != 0.0) {
      for (int iter = 0; iter < 100; ++iter) {
        u = (a * fb - b * fa) / (fb - fa);
        const double fu = hermite(u);
        if (std::abs(fu) < kSectionTol || (b - a) < 1e-15) break;
        if ((fu < 0.0) == (fa < 0.0)) {
          a = u;
          fa = fu;
          if (side == -1) fb *= 0.5;
          side = -1;
        } else {
          b = u;
          fb = fu;
          if (side == 1) fa *= 0.5;
          side = 1;
        }
      }
    }
    out.push_back(t0 + u * dt);
  }
  if (out.size() < 2) {
    throw Error(ErrorCode::NoCrossings,
                "found " + std::to_string(out.size()) + " section crossing(s), need 2");
  }
  return out;
}

double predicted_period_limit(double M, const ModelParams& p) {
  if (M == 0.0) throw Error(ErrorCode::InvalidArgument, "period limit needs M != 0");
  const double lam = p.lambda();
  return std::numbers::pi * std::numbers::sqrt2 /
         (std::abs(M) * std::sqrt(lam * (lam + 1.0)));
}

std::array<std::complex<double>, 2> leaf_linearization_eigenvalues(
    double M, const ModelParams& p) {
  const Vec3 e = make_equilibrium(EquilibriumKind::StablePlus, std::abs(M), p).point;
  // Orthonormal basis of the tangent plane of the sphere through e.
  const Vec3 normal = e.normalized();
  const Vec3 u = Vec3::UnitZ().cross(normal).normalized();
  const Vec3 w = normal.cross(u);
  Eigen::Matrix<double, 3, 2> basis;
  basis.col(0) = u;
  basis.col(1) = w;
  const Eigen::Matrix2d restricted = basis.transpose() * jacobian(e, p) * basis;
  Eigen::EigenSolver<Eigen::Matrix2d> solver(restricted, false);
  std::array<std::complex<double>, 2> out{solver.eigenvalues()(0),
                                          solver.eigenvalues()(1)};
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.imag() < b.imag();
  });
  return out;
}

PeriodMeasurement measure_small_period(double M, double amplitude,
                                       const ModelParams& p) {
  if (M == 0.0) throw Error(ErrorCode::InvalidArgument, "period measurement needs M != 0");
  if (!(amplitude > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "amplitude must be positive");
  }
  PeriodMeasurement out;
  out.M = M;
  out.amplitude = amplitude;
  out.predicted_limit = predicted_period_limit(M, p);

  const Vec3 e = make_equilibrium(EquilibriumKind::StablePlus, std::abs(M), p).point;
  Vec3 s0 = e + amplitude * Vec3::UnitZ();
  s0 *= e.norm() / s0.norm();

  constexpr int kWantedGaps = 8;
  IntegratorConfig cfg;
  cfg.method = Method::RK4Fixed;
  cfg.step = out.predicted_limit / 2000.0;
  cfg.t_end = (kWantedGaps + 2.5) * out.predicted_limit;

  const VectorField field = rattleback_field(p);
  const Trajectory traj = integrate(s0, field, cfg, p);
  const std::vector<double> crossings = section_crossings(traj, field);

  std::vector<double> gaps;
  for (std::size_t i = 0; i + 1 < crossings.size(); ++i) {
    gaps.push_back(crossings[i + 1] - crossings[i]);
  }
  if (gaps.size() < kWantedGaps) {
    throw Error(ErrorCode::NoCrossings,
                "only " + std::to_string(gaps.size()) + " return times measured");
  }
  const double mean = std::accumulate(gaps.begin(), gaps.end(), 0.0) /
                      static_cast<double>(gaps.size());
  double var = 0.0;
  for (const double g : gaps) var += (g - mean) * (g - mean);
  out.measured_period = mean;
  out.period_stddev = std::sqrt(var / static_cast<double>(gaps.size()));
  out.crossings = static_cast<int>(crossings.size());
  return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj,
                          const ModelParams& p) {
  out << "t,x,y,z,H,C\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const Vec3& s = traj.states[i];
    const double h = p.lambda_is_integer() ? hamiltonian(s, p) : std::nan("");
    out << fmt17(traj.times[i]) << ',' << fmt17(s(0)) << ',' << fmt17(s(1)) << ','
        << fmt17(s(2)) << ',' << fmt17(h) << ',' << fmt17(casimir(s)) << '\n';
  }
}

}  // namespace rattleback
