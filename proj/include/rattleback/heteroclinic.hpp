#pragma once

#include <array>
#include <ostream>
#include <span>
#include <string_view>

#include "rattleback/core_model.hpp"

namespace rattleback {

/// The four closed-form connections between (0, 0, -|M|) and (0, 0, |M|).
/// PlusZero / MinusZero run in the plane y = 0 (x > 0 / x < 0);
/// ZeroPlus / ZeroMinus run in the plane x = 0 (y > 0 / y < 0).
enum class HetBranch { PlusZero, MinusZero, ZeroPlus, ZeroMinus };

inline constexpr std::array<HetBranch, 4> kAllBranches = {
    HetBranch::PlusZero, HetBranch::MinusZero, HetBranch::ZeroPlus,
    HetBranch::ZeroMinus};

std::string_view to_string(HetBranch b);

struct HetParams {
  double M = 1.0;  // nonzero; only |M| matters
  double k = 0.0;  // phase shift
  void validate() const;
};

/// Point of the branch at time t.
///
/// cosh(u) + sinh(u) is evaluated as e^u, with numerator and denominator
/// scaled by the dominant exponential, which turns every coordinate into
/// |M| sech(w) or |M| tanh(w). This is finite for every real t.
Vec3 het_state(HetBranch b, const HetParams& hp, const ModelParams& p, double t);

/// max over samples of |d/dt het_state - rhs(het_state)|_inf, with the time
/// derivative from Richardson-extrapolated five-point central differences
/// (base step 1e-4).
double het_residual(HetBranch b, const HetParams& hp, const ModelParams& p,
                    std::span<const double> t_samples);

/// States far in the past and the future, t = -+ 50/|M| max(1, 1/lambda).
struct HetLimits {
  Vec3 past;
  Vec3 future;
  /// Distance of {past, future} to {(0,0,-|M|), (0,0,|M|)} as an unordered pair.
  double gap;
};

HetLimits het_limits(HetBranch b, const HetParams& hp, const ModelParams& p);

struct FiberDeviation {
  double H = 0.0;  // max |H|
  double C = 0.0;  // max |C - M^2/2|
};

FiberDeviation het_fiber_check(HetBranch b, const HetParams& hp,
                               const ModelParams& p,
                               std::span<const double> t_samples);

/// CSV with header t,x,y,z,H,C,residual; residual is the pointwise ODE defect.
void write_heteroclinic_csv(std::ostream& out, HetBranch b, const HetParams& hp,
                            const ModelParams& p, std::span<const double> t_samples);

}  // namespace rattleback
