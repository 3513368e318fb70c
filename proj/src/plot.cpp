#include "rattleback/plot.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <limits>
#include <sstream>

#include "rattleback/format.hpp"

namespace rattleback {

namespace {

constexpr double kSize = 800.0;
constexpr double kMargin = 60.0;

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                                 "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f"};

std::array<int, 2> axes(Projection p) {
  switch (p) {
    case Projection::XY: return {0, 1};
    case Projection::XZ: return {0, 2};
    case Projection::YZ: return {1, 2};
  }
  return {0, 1};
}

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

PlotBounds data_bounds(const PlotSpec& plot, int a, int b) {
  double inf = std::numeric_limits<double>::infinity();
  PlotBounds r{inf, -inf, inf, -inf};
  for (const auto& s : plot.series) {
    for (const Vec3& v : s.points) {
      r.xmin = std::min(r.xmin, v(a));
      r.xmax = std::max(r.xmax, v(a));
      r.ymin = std::min(r.ymin, v(b));
      r.ymax = std::max(r.ymax, v(b));
    }
  }
  // Equal scale on both axes, centred, with a 5% pad.
  const double span = std::max({r.xmax - r.xmin, r.ymax - r.ymin, 1e-12}) * 1.1;
  const double cx = 0.5 * (r.xmin + r.xmax), cy = 0.5 * (r.ymin + r.ymax);
  return {cx - span / 2, cx + span / 2, cy - span / 2, cy + span / 2};
}

}  // namespace

std::string_view to_string(Projection p) {
  switch (p) {
    case Projection::XY: return "XY";
    case Projection::XZ: return "XZ";
    case Projection::YZ: return "YZ";
  }
  return "XY";
}

Projection parse_projection(std::string_view text) {
  std::string t;
  for (char ch : text) t += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  if (t == "XY") return Projection::XY;
  if (t == "XZ") return Projection::XZ;
  if (t == "YZ") return Projection::YZ;
  throw Error(ErrorCode::InvalidArgument, "projection must be xy, xz or yz, got '" + std::string(text) + "'");
}

std::string emit_svg(const PlotSpec& plot) {
  std::size_t total = 0;
  for (const auto& s : plot.series) total += s.points.size();
  if (plot.series.empty() || total == 0) throw Error(ErrorCode::EmptySeries, "nothing to plot");

  const auto [a, b] = axes(plot.projection);
  const PlotBounds bd = plot.bounds ? *plot.bounds : data_bounds(plot, a, b);
  if (!(bd.xmax > bd.xmin) || !(bd.ymax > bd.ymin)) {
    throw Error(ErrorCode::InvalidArgument, "plot bounds must have positive extent");
  }
  const double inner = kSize - 2 * kMargin;
  auto px = [&](double u) { return kMargin + (u - bd.xmin) / (bd.xmax - bd.xmin) * inner; };
  auto py = [&](double v) { return kSize - kMargin - (v - bd.ymin) / (bd.ymax - bd.ymin) * inner; };

  const char* names = "xyz";
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" viewBox=\"0 0 800 800\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"800\" fill=\"white\"/>\n"
      << "<rect x=\"" << fmt2(kMargin) << "\" y=\"" << fmt2(kMargin) << "\" width=\"" << fmt2(inner)
      << "\" height=\"" << fmt2(inner) << "\" fill=\"none\" stroke=\"black\"/>\n"
      << "<g font-family=\"sans-serif\" font-size=\"14\">\n"
      << "<text x=\"400.00\" y=\"790.00\" text-anchor=\"middle\">" << names[a] << "</text>\n"
      << "<text x=\"20.00\" y=\"400.00\" text-anchor=\"middle\">" << names[b] << "</text>\n"
      << "<text x=\"" << fmt2(kMargin) << "\" y=\"760.00\">" << fmt6(bd.xmin) << "</text>\n"
      << "<text x=\"" << fmt2(kSize - kMargin) << "\" y=\"760.00\" text-anchor=\"end\">" << fmt6(bd.xmax)
      << "</text>\n"
      << "<text x=\"5.00\" y=\"" << fmt2(kSize - kMargin) << "\">" << fmt6(bd.ymin) << "</text>\n"
      << "<text x=\"5.00\" y=\"" << fmt2(kMargin + 14) << "\">" << fmt6(bd.ymax) << "</text>\n"
      << "</g>\n";

  for (std::size_t i = 0; i < plot.series.size(); ++i) {
    const Series& s = plot.series[i];
    if (s.points.empty()) continue;
    out << "<" << (s.closed ? "polygon" : "polyline") << " fill=\"none\" stroke=\""
        << kPalette[i % kPalette.size()] << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < s.points.size(); ++k) {
      if (k) out << ' ';
      out << fmt2(px(s.points[k](a))) << ',' << fmt2(py(s.points[k](b)));
    }
    out << "\"><title>" << escape(s.label) << "</title></" << (s.closed ? "polygon" : "polyline")
        << ">\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace rattleback
