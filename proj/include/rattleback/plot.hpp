#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rattleback/core_model.hpp"

namespace rattleback {

enum class Projection { XY, XZ, YZ };

std::string_view to_string(Projection p);

/// Accepts xy, xz, yz in either case; throws InvalidArgument otherwise.
Projection parse_projection(std::string_view text);

struct Series {
  std::string label;
  std::vector<Vec3> points;
  bool closed = false;  // drawn as a polygon
};

struct PlotBounds {
  double xmin, xmax, ymin, ymax;
};

struct PlotSpec {
  Projection projection = Projection::XY;
  std::vector<Series> series;
  std::optional<PlotBounds> bounds;  // data range plus 5% when absent
};

/// 800x800 SVG of the projected series with coordinates rounded to two
/// decimals. The same spec always yields the same bytes.
///
/// Throws EmptySeries when there is no series or no point at all.
std::string emit_svg(const PlotSpec& plot);

}  // namespace rattleback
