#include "rattleback/ec_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "rattleback/format.hpp"

namespace rattleback {

namespace {

constexpr int kGrid = 64;
constexpr int kMaxNewton = 30;
constexpr double kCorrectorTol = 1e-11;

struct Level {
  double h;
  double c;
  const ModelParams& p;

  Eigen::Vector2d residual(const Vec3& s) const {
    return {hamiltonian(s, p) - h, casimir(s) - c};
  }

  bool converged(const Eigen::Vector2d& r) const {
    return std::abs(r(0)) <= kCorrectorTol * std::max(1.0, std::abs(h)) &&
           std::abs(r(1)) <= kCorrectorTol * std::max(1.0, c);
  }

  /// Minimum-norm Gauss-Newton onto the level set; updates stay in
  /// span(grad H, grad C), the normal plane of the fiber.
  std::optional<Vec3> correct(Vec3 s) const {
    for (int iter = 0; iter < kMaxNewton; ++iter) {
      const Eigen::Vector2d r = residual(s);
      if (converged(r)) return s;
      Eigen::Matrix<double, 2, 3> jac;
      jac.row(0) = grad_hamiltonian(s, p).transpose();
      jac.row(1) = grad_casimir(s).transpose();
      const Eigen::Matrix2d gram = jac * jac.transpose();
      if (std::abs(gram.determinant()) < 1e-300) return std::nullopt;
      s -= jac.transpose() * gram.ldlt().solve(r);
      if (!s.allFinite()) return std::nullopt;
    }
    const Eigen::Vector2d r = residual(s);
    if (converged(r)) return s;
    return std::nullopt;
  }
};

Vec3 sphere_point(double radius, double theta, double phi) {
  return radius * Vec3(std::sin(theta) * std::cos(phi),
                       std::sin(theta) * std::sin(phi), std::cos(theta));
}

// Bisection for a sign change of H - h along a parametrized curve.
template <typename Curve>
Vec3 bisect(const Curve& curve, const Level& level, double a, double b) {
  double fa = hamiltonian(curve(a), level.p) - level.h;
  for (int iter = 0; iter < 60; ++iter) {
    const double m = 0.5 * (a + b);
    const double fm = hamiltonian(curve(m), level.p) - level.h;
    if ((fm < 0.0) == (fa < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return curve(0.5 * (a + b));
}

std::vector<Vec3> grid_seeds(const Level& level) {
  const double radius = std::sqrt(2.0 * level.c);
  auto theta_of = [](double i) { return (i + 0.5) * std::numbers::pi / kGrid; };
  auto phi_of = [](double j) { return 2.0 * std::numbers::pi * j / kGrid; };
  auto value = [&](int i, int j) {
    return hamiltonian(sphere_point(radius, theta_of(i), phi_of(j)), level.p) - level.h;
  };

  std::vector<Vec3> seeds;
  for (int i = 0; i < kGrid; ++i) {
    for (int j = 0; j < kGrid; ++j) {
      const double f = value(i, j);
      // along phi
      if ((f < 0.0) != (value(i, (j + 1) % kGrid) < 0.0)) {
        auto curve = [&](double u) {
          return sphere_point(radius, theta_of(i), phi_of(j + u));
        };
        seeds.push_back(bisect(curve, level, 0.0, 1.0));
      }
      // along theta
      if (i + 1 < kGrid && (f < 0.0) != (value(i + 1, j) < 0.0)) {
        auto curve = [&](double u) {
          return sphere_point(radius, theta_of(i + u), phi_of(j));
        };
        seeds.push_back(bisect(curve, level, 0.0, 1.0));
      }
    }
  }
  return seeds;
}

// Every regular component encircles one extremum of H on the sphere, so the
// quarter great circle from that extremum to the pole (where H = 0) must
// cross it. These seeds back up the grid for fibers close to the boundary.
std::vector<Vec3> extremum_seeds(const Level& level) {
  const double radius = std::sqrt(2.0 * level.c);
  const double h_max = std::sqrt(boundary_value(level.c, level.p));
  const ECValue extreme{level.h > 0.0 ? h_max : -h_max, level.c};
  std::vector<Vec3> seeds;
  for (const Equilibrium& e : stable_equilibria_for(extreme, level.p)) {
    const Vec3 pole = radius * Vec3::UnitZ();
    auto curve = [&](double theta) {
      return Vec3(std::cos(theta) * e.point + std::sin(theta) * pole);
    };
    seeds.push_back(bisect(curve, level, 0.0, 0.5 * std::numbers::pi));
  }
  return seeds;
}

double segment_distance(const Vec3& a, const Vec3& b, const Vec3& s) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  double u = len2 > 0.0 ? (s - a).dot(ab) / len2 : 0.0;
  u = std::clamp(u, 0.0, 1.0);
  return (a + u * ab - s).norm();
}

double polyline_distance(const std::vector<Vec3>& poly, const Vec3& s) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = poly.size();
  if (n == 1) return (poly[0] - s).norm();
  for (std::size_t i = 0; i < n; ++i) {
    best = std::min(best, segment_distance(poly[i], poly[(i + 1) % n], s));
  }
  return best;
}

std::vector<Vec3> continue_curve(const Vec3& seed, const Level& level,
                                 double step) {
  constexpr long kMaxSteps = 5'000'000;
  const double min_step = step * 1e-6;

  std::vector<Vec3> pts{seed};
  const Vec3 start = seed;
  Vec3 x = seed;
  Vec3 prev_tangent = Vec3::Zero();
  double h = step;
  bool left_start = false;

  for (long iter = 0; iter < kMaxSteps; ++iter) {
    Vec3 tangent = grad_hamiltonian(x, level.p).cross(grad_casimir(x));
    const double tn = tangent.norm();
    if (!(tn > 0.0)) {
      throw Error(ErrorCode::ContinuationStalled, "fiber tangent vanished");
    }
    tangent /= tn;
    if (prev_tangent.dot(tangent) < 0.0) tangent = -tangent;

    const Vec3 predicted = x + h * tangent;
    const std::optional<Vec3> corrected = level.correct(predicted);
    if (!corrected || (*corrected - predicted).norm() > 0.5 * h) {
      h *= 0.5;
      if (h < min_step) {
        throw Error(ErrorCode::ContinuationStalled,
                    "corrector failed to converge at step " + std::to_string(h));
      }
      continue;
    }
    x = *corrected;
    prev_tangent = tangent;
    h = std::min(step, 2.0 * h);

    const double gap = (x - start).norm();
    if (gap > 3.0 * step) left_start = true;
    pts.push_back(x);
    if (left_start && gap < step) return pts;
  }
  throw Error(ErrorCode::ContinuationStalled, "fiber did not close");
}

}  // namespace

std::string_view to_string(Stratum s) {
  switch (s) {
    case Stratum::Outside: return "Outside";
    case Stratum::SigmaS0: return "SigmaS0";
    case Stratum::SigmaU: return "SigmaU";
    case Stratum::SigmaSMinusStar: return "SigmaSMinusStar";
    case Stratum::SigmaSPlusStar: return "SigmaSPlusStar";
    case Stratum::SigmaPMinus: return "SigmaPMinus";
    case Stratum::SigmaPPlus: return "SigmaPPlus";
  }
  return "Unknown";
}

std::string_view to_string(FiberTopology f) {
  switch (f) {
    case FiberTopology::Empty: return "Empty";
    case FiberTopology::Point: return "Point";
    case FiberTopology::TwoPoints: return "TwoPoints";
    case FiberTopology::TwoCircles: return "TwoCircles";
    case FiberTopology::HeteroclinicSet: return "HeteroclinicSet";
  }
  return "Unknown";
}

ECValue ec(const Vec3& s, const ModelParams& p) {
  return {hamiltonian(s, p), casimir(s)};
}

double boundary_value(double c, const ModelParams& p) {
  if (!(c >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "boundary_value needs c >= 0");
  }
  const int n = p.integer_lambda();
  const double lam = p.lambda();
  return ipow(lam, n) * ipow(2.0 * c / (lam + 1.0), n + 1);
}

Stratum classify_value(ECValue v, const ModelParams& p, double tol_rel) {
  p.integer_lambda();
  if (!std::isfinite(v.h) || !std::isfinite(v.c)) {
    throw Error(ErrorCode::InvalidArgument, "energy-Casimir value must be finite");
  }
  if (v.c < 0.0) return Stratum::Outside;
  const double bound = boundary_value(v.c, p);
  const double h2 = v.h * v.h;
  if (h2 > bound * (1.0 + tol_rel)) return Stratum::Outside;
  if (v.h == 0.0) return v.c == 0.0 ? Stratum::SigmaS0 : Stratum::SigmaU;
  if (std::abs(h2 - bound) <= tol_rel * bound) {
    return v.h < 0.0 ? Stratum::SigmaSMinusStar : Stratum::SigmaSPlusStar;
  }
  return v.h < 0.0 ? Stratum::SigmaPMinus : Stratum::SigmaPPlus;
}

FiberTopology fiber_topology(Stratum st) {
  switch (st) {
    case Stratum::Outside: return FiberTopology::Empty;
    case Stratum::SigmaS0: return FiberTopology::Point;
    case Stratum::SigmaU: return FiberTopology::HeteroclinicSet;
    case Stratum::SigmaSMinusStar:
    case Stratum::SigmaSPlusStar: return FiberTopology::TwoPoints;
    case Stratum::SigmaPMinus:
    case Stratum::SigmaPPlus: return FiberTopology::TwoCircles;
  }
  return FiberTopology::Empty;
}

std::vector<Equilibrium> stable_equilibria_for(ECValue v, const ModelParams& p) {
  const Stratum st = classify_value(v, p);
  if (st != Stratum::SigmaSMinusStar && st != Stratum::SigmaSPlusStar) {
    throw Error(ErrorCode::WrongStratum,
                "expected a boundary stratum, got " + std::string(to_string(st)));
  }
  const double M = std::sqrt(2.0 * v.c / (p.lambda() + 1.0));
  const bool even = p.integer_lambda() % 2 == 0;
  const bool positive = v.h > 0.0;
  auto e = [&](EquilibriumKind kind, double m) { return make_equilibrium(kind, m, p); };
  using K = EquilibriumKind;
  if (even) {
    return positive ? std::vector{e(K::StableMinus, M), e(K::StablePlus, M)}
                    : std::vector{e(K::StableMinus, -M), e(K::StablePlus, -M)};
  }
  return positive ? std::vector{e(K::StablePlus, M), e(K::StablePlus, -M)}
                  : std::vector{e(K::StableMinus, M), e(K::StableMinus, -M)};
}

FiberTrace trace_fiber(ECValue v, const ModelParams& p, double step) {
  const Stratum st = classify_value(v, p);
  if (st != Stratum::SigmaPMinus && st != Stratum::SigmaPPlus) {
    throw Error(ErrorCode::WrongStratum,
                "fiber tracing needs an interior stratum, got " +
                    std::string(to_string(st)));
  }
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "trace step must be positive");

  const Level level{v.h, v.c, p};
  std::vector<Vec3> seeds = grid_seeds(level);
  for (const Vec3& s : extremum_seeds(level)) seeds.push_back(s);

  FiberTrace trace;
  const double same_component = 10.0 * step;
  for (const Vec3& raw : seeds) {
    const std::optional<Vec3> seed = level.correct(raw);
    if (!seed) continue;
    const bool known = std::any_of(
        trace.components.begin(), trace.components.end(),
        [&](const auto& comp) { return polyline_distance(comp, *seed) < same_component; });
    if (known) continue;
    trace.components.push_back(continue_curve(*seed, level, step));
  }
  if (trace.components.empty()) {
    throw Error(ErrorCode::SeedNotFound, "no point of the fiber was found on the sphere");
  }

  for (const auto& comp : trace.components) {
    for (const Vec3& s : comp) {
      const Eigen::Vector2d r = level.residual(s);
      trace.residual_H = std::max(trace.residual_H, std::abs(r(0)));
      trace.residual_C = std::max(trace.residual_C, std::abs(r(1)));
    }
  }
  return trace;
}

double distance_to_fiber(const FiberTrace& trace, const Vec3& s) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& comp : trace.components) {
    best = std::min(best, polyline_distance(comp, s));
  }
  return best;
}

NonconvexityWitness nonconvexity_witness(const ModelParams& p) {
  // Images of e+^1 and e+^2 sit on the h > 0 boundary curve h ~ c^((lambda+1)/2),
  // which is strictly convex, so their midpoint lies above it.
  const ECValue a = ec(make_equilibrium(EquilibriumKind::StablePlus, 1.0, p).point, p);
  const ECValue b = ec(make_equilibrium(EquilibriumKind::StablePlus, 2.0, p).point, p);
  const ECValue mid{0.5 * (a.h + b.h), 0.5 * (a.c + b.c)};
  return {a, b, mid};
}

void write_fiber_csv(std::ostream& out, const FiberTrace& trace) {
  out << "component,idx,x,y,z\n";
  for (std::size_t c = 0; c < trace.components.size(); ++c) {
    const auto& comp = trace.components[c];
    for (std::size_t i = 0; i < comp.size(); ++i) {
      out << c << ',' << i << ',' << fmt17(comp[i](0)) << ',' << fmt17(comp[i](1))
          << ',' << fmt17(comp[i](2)) << '\n';
    }
  }
}

}  // namespace rattleback
