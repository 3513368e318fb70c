#include "rattleback/heteroclinic.hpp"

#include <algorithm>
#include <cmath>

#include "rattleback/format.hpp"

namespace rattleback {

namespace {

constexpr double kDiffStep = 1e-4;

double sech(double w) {
  const double e = std::exp(-2.0 * std::abs(w));
  return 2.0 * std::exp(-std::abs(w)) / (1.0 + e);
}

Vec3 time_derivative(HetBranch b, const HetParams& hp, const ModelParams& p,
                     double t) {
  auto five_point = [&](double h) {
    return Vec3((het_state(b, hp, p, t - 2 * h) - 8.0 * het_state(b, hp, p, t - h) +
                 8.0 * het_state(b, hp, p, t + h) - het_state(b, hp, p, t + 2 * h)) /
                (12.0 * h));
  };
  const Vec3 coarse = five_point(kDiffStep);
  const Vec3 fine = five_point(0.5 * kDiffStep);
  return (16.0 * fine - coarse) / 15.0;
}

double pointwise_residual(HetBranch b, const HetParams& hp, const ModelParams& p,
                          double t) {
  const Vec3 s = het_state(b, hp, p, t);
  return (time_derivative(b, hp, p, t) - rhs(s, p)).lpNorm<Eigen::Infinity>();
}

}  // namespace

std::string_view to_string(HetBranch b) {
  switch (b) {
    case HetBranch::PlusZero: return "PlusZero";
    case HetBranch::MinusZero: return "MinusZero";
    case HetBranch::ZeroPlus: return "ZeroPlus";
    case HetBranch::ZeroMinus: return "ZeroMinus";
  }
  return "Unknown";
}

void HetParams::validate() const {
  if (M == 0.0 || !std::isfinite(M) || !std::isfinite(k)) {
    throw Error(ErrorCode::InvalidArgument, "heteroclinic branches need finite M != 0");
  }
}

Vec3 het_state(HetBranch b, const HetParams& hp, const ModelParams& p, double t) {
  hp.validate();
  p.integer_lambda();
  const double m = std::abs(hp.M);
  const double lam = p.lambda();
  Vec3 out;
  switch (b) {
    case HetBranch::PlusZero:
    case HetBranch::MinusZero: {
      // x = 2M^2 e^{m(lam t + k)} / (M^2 e^{2mk} + e^{2 m lam t}),
      // z~ = m (M^2 e^{2mk} - e^{2 m lam t}) / (M^2 e^{2mk} + e^{2 m lam t}).
      const double w = std::log(m) + m * hp.k - m * lam * t;
      const double x = m * sech(w);
      out = Vec3(b == HetBranch::PlusZero ? x : -x, 0.0, m * std::tanh(w));
      break;
    }
    case HetBranch::ZeroPlus:
    case HetBranch::ZeroMinus: {
      // y = 2M^2 / (M^2 e^{v} + e^{-v}), z = m (M^2 e^{2v} - 1) / (M^2 e^{2v} + 1),
      // v = m (t + k).
      const double w = std::log(m) + m * (t + hp.k);
      const double y = m * sech(w);
      out = Vec3(0.0, b == HetBranch::ZeroPlus ? y : -y, m * std::tanh(w));
      break;
    }
  }
  if (!out.allFinite()) {
    throw Error(ErrorCode::Overflow, "heteroclinic evaluation overflowed");
  }
  return out;
}

double het_residual(HetBranch b, const HetParams& hp, const ModelParams& p,
                    std::span<const double> t_samples) {
  double worst = 0.0;
  for (const double t : t_samples) {
    worst = std::max(worst, pointwise_residual(b, hp, p, t));
  }
  return worst;
}

HetLimits het_limits(HetBranch b, const HetParams& hp, const ModelParams& p) {
  hp.validate();
  const double m = std::abs(hp.M);
  const double t_big = 50.0 / m * std::max(1.0, 1.0 / p.lambda());
  HetLimits out;
  out.past = het_state(b, hp, p, -t_big);
  out.future = het_state(b, hp, p, t_big);
  const Vec3 south(0.0, 0.0, -m), north(0.0, 0.0, m);
  const double direct = std::max((out.past - south).norm(), (out.future - north).norm());
  const double swapped = std::max((out.past - north).norm(), (out.future - south).norm());
  out.gap = std::min(direct, swapped);
  return out;
}

FiberDeviation het_fiber_check(HetBranch b, const HetParams& hp,
                               const ModelParams& p,
                               std::span<const double> t_samples) {
  const double target = 0.5 * hp.M * hp.M;
  FiberDeviation dev;
  for (const double t : t_samples) {
    const Vec3 s = het_state(b, hp, p, t);
    dev.H = std::max(dev.H, std::abs(hamiltonian(s, p)));
    dev.C = std::max(dev.C, std::abs(casimir(s) - target));
  }
  return dev;
}

void write_heteroclinic_csv(std::ostream& out, HetBranch b, const HetParams& hp,
                            const ModelParams& p, std::span<const double> t_samples) {
  out << "t,x,y,z,H,C,residual\n";
  for (const double t : t_samples) {
    const Vec3 s = het_state(b, hp, p, t);
    out << fmt17(t) << ',' << fmt17(s(0)) << ',' << fmt17(s(1)) << ',' << fmt17(s(2))
        << ',' << fmt17(hamiltonian(s, p)) << ',' << fmt17(casimir(s)) << ','
        << fmt17(pointwise_residual(b, hp, p, t)) << '\n';
  }
}

}  // namespace rattleback
