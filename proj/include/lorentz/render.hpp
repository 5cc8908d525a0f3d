#pragma once

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "lorentz/embedding_io.hpp"
#include "lorentz/error.hpp"
#include "lorentz/geometry.hpp"

// Poincare-disk scatter plot as deterministic SVG: the unit-circle boundary,
// one dot per concept, optional straight edge segments, optional id labels.
// Identical inputs produce byte-identical output.

namespace lorentz {

struct RenderOptions {
  int size_px = 800;
  double point_radius = 2.5;
  bool draw_edges = true;
  bool draw_labels = false;
  // edges as index pairs into the point list
  std::vector<std::pair<size_t, size_t>> edges;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

/// Renders 2-d Poincare coordinates (one per id) to an SVG scatter plot.
inline std::string render_svg(const std::vector<std::string>& ids,
                              const std::vector<PoincarePoint>& points,
                              const RenderOptions& opt) {
  if (ids.size() != points.size())
    throw std::invalid_argument("render_svg: ids/points size mismatch");
  for (const auto& p : points)
    if (p.dim() != 2)
      throw DataError("render requires a 2-d Poincare projection, got dim " +
                      std::to_string(p.dim()));

  const double s = double(opt.size_px);
  const double pad = 4.0 + opt.point_radius;
  const double half = (s - 2.0 * pad) / 2.0;
  const double cx0 = s / 2.0, cy0 = s / 2.0;
  auto px = [&](double x) { return cx0 + x * half; };
  auto py = [&](double y) { return cy0 - y * half; };  // y up

  char buf[256];
  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                "viewBox=\"0 0 %d %d\">\n",
                opt.size_px, opt.size_px, opt.size_px, opt.size_px);
  out += buf;
  std::snprintf(buf, sizeof buf, "<rect width=\"%d\" height=\"%d\" fill=\"white\"/>\n",
                opt.size_px, opt.size_px);
  out += buf;
  std::snprintf(buf, sizeof buf,
                "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"%.3f\" fill=\"none\" stroke=\"#444444\" "
                "stroke-width=\"1\"/>\n",
                cx0, cy0, half);
  out += buf;

  if (opt.draw_edges) {
    for (auto& [a, b] : opt.edges) {
      if (a >= points.size() || b >= points.size())
        throw std::invalid_argument("render_svg: edge endpoint out of range");
      std::snprintf(buf, sizeof buf,
                    "<line x1=\"%.3f\" y1=\"%.3f\" x2=\"%.3f\" y2=\"%.3f\" "
                    "stroke=\"#7f9fd0\" stroke-width=\"0.5\" stroke-opacity=\"0.6\"/>\n",
                    px(points[a].coords[0]), py(points[a].coords[1]),
                    px(points[b].coords[0]), py(points[b].coords[1]));
      out += buf;
    }
  }
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf,
                  "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"%.3f\" fill=\"#1f4e8c\"/>\n",
                  px(p.coords[0]), py(p.coords[1]), opt.point_radius);
    out += buf;
  }
  if (opt.draw_labels) {
    for (size_t i = 0; i < points.size(); ++i) {
      std::snprintf(buf, sizeof buf, "<text x=\"%.3f\" y=\"%.3f\" font-size=\"8\">",
                    px(points[i].coords[0]) + opt.point_radius + 1.0,
                    py(points[i].coords[1]) - 1.0);
      out += buf;
      out += detail::xml_escape(ids[i]);
      out += "</text>\n";
    }
  }
  out += "</svg>\n";
  return out;
}

}  // namespace lorentz
