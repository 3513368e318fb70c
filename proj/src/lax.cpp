#include "rattleback/lax.hpp"

#include <algorithm>
#include <cmath>

namespace rattleback {

double lax_residual(const Vec3& s, const ModelParams& p) {
  const LaxPair<double> pair = lax_matrices(s, p);
  const Mat3 commutator = pair.L * pair.B - pair.B * pair.L;
  return (lax_derivative(s, p) - commutator).cwiseAbs().maxCoeff();
}

IsospectralInvariants isospectral_invariants(const Vec3& s, const ModelParams& p) {
  const Mat3 L = lax_matrices(s, p).L;
  IsospectralInvariants out;
  out.trace_L2 = (L * L).trace();
  const double w = std::sqrt(L(0, 1) * L(0, 1) + L(0, 2) * L(0, 2) + L(1, 2) * L(1, 2));
  out.eig_abs = {0.0, w, w};
  return out;
}

LaxCheck lax_check(std::span<const Vec3> states, const ModelParams& p) {
  LaxCheck out;
  if (states.empty()) return out;
  const IsospectralInvariants first = isospectral_invariants(states.front(), p);
  for (const Vec3& s : states) {
    const double res = lax_residual(s, p);
    out.max_residual = std::max(out.max_residual, res);
    out.max_scaled_residual =
        std::max(out.max_scaled_residual, res / (1.0 + std::pow(s.norm(), 3)));
    const IsospectralInvariants inv = isospectral_invariants(s, p);
    out.trace_drift = std::max(out.trace_drift, std::abs(inv.trace_L2 - first.trace_L2));
    for (int i = 0; i < 3; ++i) {
      out.eig_drift = std::max(out.eig_drift, std::abs(inv.eig_abs[i] - first.eig_abs[i]));
    }
  }
  out.samples = states.size();
  return out;
}

}  // namespace rattleback
