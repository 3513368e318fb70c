#pragma once

#include <ostream>
#include <string_view>
#include <vector>

#include "rattleback/core_model.hpp"

namespace rattleback {

/// A point (h, c) = (H(s), C(s)) of the energy-Casimir image.
struct ECValue {
  double h = 0.0;
  double c = 0.0;
};

enum class Stratum {
  Outside,
  SigmaS0,          // (0, 0), image of the origin
  SigmaU,           // h = 0, c > 0, image of the spin axis
  SigmaSMinusStar,  // boundary curve, h < 0
  SigmaSPlusStar,   // boundary curve, h > 0
  SigmaPMinus,      // interior, h < 0
  SigmaPPlus,       // interior, h > 0
};

enum class FiberTopology { Empty, Point, TwoPoints, TwoCircles, HeteroclinicSet };

std::string_view to_string(Stratum s);
std::string_view to_string(FiberTopology f);

ECValue ec(const Vec3& s, const ModelParams& p);

/// Squared energy on the boundary of the image:
/// lambda^lambda (2 / (lambda + 1))^(lambda + 1) c^(lambda + 1).
double boundary_value(double c, const ModelParams& p);

/// Stratum of (h, c). Points with |h^2 - boundary| <= tol_rel * boundary
/// belong to the boundary strata.
Stratum classify_value(ECValue v, const ModelParams& p, double tol_rel = 1e-9);

FiberTopology fiber_topology(Stratum st);

/// The two stable equilibria whose image is v, which must lie on a boundary
/// stratum. Which pair appears depends on the parity of lambda.
std::vector<Equilibrium> stable_equilibria_for(ECValue v, const ModelParams& p);

struct FiberTrace {
  std::vector<std::vector<Vec3>> components;  // closed polylines
  double residual_H = 0.0;  // max |H - h| over all vertices
  double residual_C = 0.0;  // max |C - c| over all vertices
};

/// Traces the regular fiber {H = h} n {C = c} by predictor-corrector
/// continuation with arc-length step `step`. Requires an interior stratum.
///
/// Throws WrongStratum, SeedNotFound or ContinuationStalled.
FiberTrace trace_fiber(ECValue v, const ModelParams& p, double step = 1e-3);

/// Euclidean distance from s to the closest segment of any traced component.
double distance_to_fiber(const FiberTrace& trace, const Vec3& s);

/// Two boundary points of the image and their midpoint, which lies outside
/// the image: the image is not the convex hull of the stable-equilibrium
/// image.
struct NonconvexityWitness {
  ECValue first;
  ECValue second;
  ECValue combination;
};

NonconvexityWitness nonconvexity_witness(const ModelParams& p);

/// CSV with header component,idx,x,y,z.
void write_fiber_csv(std::ostream& out, const FiberTrace& trace);

}  // namespace rattleback
