#include "rattleback/core_model.hpp"

#include <algorithm>
#include <string>

namespace rattleback {

namespace {

constexpr double kUnimodularTol = 1e-12;
constexpr double kMinorTol = 1e-12;

}  // namespace

ModelParams::ModelParams(double lambda) : lambda_(lambda), is_integer_(false) {
  if (!std::isfinite(lambda) || lambda <= 0.0) {
    throw Error(ErrorCode::InvalidArgument,
                "lambda must be a finite positive real, got " +
                    std::to_string(lambda));
  }
  is_integer_ = lambda >= 2.0 && lambda <= 1e6 && std::floor(lambda) == lambda;
}

int ModelParams::integer_lambda() const {
  if (!is_integer_) {
    throw Error(ErrorCode::NonIntegerLambda,
                "operation requires an integer lambda >= 2, got " +
                    std::to_string(lambda_));
  }
  return static_cast<int>(lambda_);
}

void RealizationParams::validate() const {
  if (!(std::abs(determinant() - 1.0) <= kUnimodularTol)) {
    throw Error(ErrorCode::NotUnimodular,
                "ad - bc = " + std::to_string(determinant()) + ", expected 1");
  }
}

Equilibrium make_equilibrium(EquilibriumKind kind, double M,
                             const ModelParams& p) {
  const double root = std::sqrt(p.lambda());
  if (M == 0.0) return {EquilibriumKind::Origin, Vec3::Zero(), 0.0};
  switch (kind) {
    case EquilibriumKind::StablePlus:
      return {kind, Vec3(M, M * root, 0.0), M};
    case EquilibriumKind::StableMinus:
      return {kind, Vec3(M, -M * root, 0.0), M};
    case EquilibriumKind::SpinAxis:
      return {kind, Vec3(0.0, 0.0, M), M};
    case EquilibriumKind::Origin:
      break;
  }
  return {EquilibriumKind::Origin, Vec3::Zero(), 0.0};
}

std::vector<Equilibrium> equilibria(std::span<const double> M_list,
                                    const ModelParams& p) {
  std::vector<Equilibrium> out;
  bool origin_emitted = false;
  for (const double M : M_list) {
    if (!std::isfinite(M)) {
      throw Error(ErrorCode::InvalidArgument, "equilibrium parameter M must be finite");
    }
    if (M == 0.0) {
      if (!origin_emitted) {
        out.push_back(make_equilibrium(EquilibriumKind::Origin, 0.0, p));
        origin_emitted = true;
      }
      continue;
    }
    out.push_back(make_equilibrium(EquilibriumKind::StableMinus, M, p));
    out.push_back(make_equilibrium(EquilibriumKind::StablePlus, M, p));
    out.push_back(make_equilibrium(EquilibriumKind::SpinAxis, M, p));
  }
  return out;
}

ArnoldReport arnold_report(const Equilibrium& e, const ModelParams& p) {
  if (e.kind != EquilibriumKind::StablePlus &&
      e.kind != EquilibriumKind::StableMinus) {
    throw Error(ErrorCode::InvalidArgument,
                "the Arnold test applies to e+ / e- equilibria only");
  }
  if (e.M == 0.0) {
    throw Error(ErrorCode::InvalidArgument, "the Arnold test needs M != 0");
  }
  const int n = p.integer_lambda();
  const double root = std::sqrt(p.lambda());
  const bool plus = e.kind == EquilibriumKind::StablePlus;

  // mu = (+-1)^lambda / (M^(lambda-1) sqrt(lambda)^lambda)
  const double sign = (plus || n % 2 == 0) ? 1.0 : -1.0;
  const double mu = sign / (ipow(e.M, n - 1) * ipow(root, n));

  ArnoldReport report;
  report.mu = mu;
  report.kernel_basis = {Vec3(plus ? -root : root, 1.0, 0.0),
                         Vec3(0.0, 0.0, 1.0)};

  const Mat3 second_variation =
      Mat3::Identity() - mu * hessian_hamiltonian(e.point, p);
  Eigen::Matrix<double, 3, 2> basis;
  basis.col(0) = report.kernel_basis[0];
  basis.col(1) = report.kernel_basis[1];
  report.restricted_hessian = basis.transpose() * second_variation * basis;

  const auto& rh = report.restricted_hessian;
  report.positive_definite =
      rh(0, 0) > kMinorTol && rh.determinant() > kMinorTol;
  return report;
}

StabilityReport classify_equilibrium(const Equilibrium& e,
                                     const ModelParams& p) {
  StabilityReport report{};
  Eigen::EigenSolver<Mat3> solver(jacobian(e.point, p),
                                  /*computeEigenvectors=*/false);
  const auto& values = solver.eigenvalues();
  for (int i = 0; i < 3; ++i) report.spectrum[i] = values(i);
  std::sort(report.spectrum.begin(), report.spectrum.end(),
            [](const std::complex<double>& a, const std::complex<double>& b) {
              if (a.real() != b.real()) return a.real() < b.real();
              return a.imag() < b.imag();
            });

  switch (e.kind) {
    case EquilibriumKind::Origin:
      // C itself is a Lyapunov function.
      report.verdict = Verdict::LyapunovStable;
      break;
    case EquilibriumKind::SpinAxis: {
      const double scale = std::max(1.0, std::abs(e.M) * p.lambda());
      const bool expanding =
          std::any_of(report.spectrum.begin(), report.spectrum.end(),
                      [&](const std::complex<double>& v) {
                        return v.real() > 1e-12 * scale;
                      });
      report.verdict = expanding ? Verdict::Unstable : Verdict::LyapunovStable;
      break;
    }
    case EquilibriumKind::StablePlus:
    case EquilibriumKind::StableMinus: {
      report.arnold = arnold_report(e, p);
      // The restricted Hessian is diag(2(lambda+1), 1), so the second branch
      // is unreachable for lambda > 0.
      report.verdict = report.arnold->positive_definite
                           ? Verdict::LyapunovStable
                           : Verdict::Unstable;
      break;
    }
  }
  return report;
}

std::string_view to_string(EquilibriumKind kind) {
  switch (kind) {
    case EquilibriumKind::StablePlus: return "StablePlus";
    case EquilibriumKind::StableMinus: return "StableMinus";
    case EquilibriumKind::Origin: return "Origin";
    case EquilibriumKind::SpinAxis: return "SpinAxis";
  }
  return "Unknown";
}

std::string_view to_string(Verdict verdict) {
  return verdict == Verdict::LyapunovStable ? "LyapunovStable" : "Unstable";
}

}  // namespace rattleback
