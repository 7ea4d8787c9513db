#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>

#include "treeflow/experiments.hpp"

namespace treeflow {

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string svg_escape(const std::string& s) {
  std::string out;
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

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

inline std::string slope_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace detail

inline std::string curve_label(const RiskCurve& c) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "alpha=%g %s slope=%.3f", c.alpha, c.estimator.c_str(), c.fit.slope);
  return buf;
}

//! Log-log scatter of every curve with its fitted power law and a legend that
//! carries each fitted slope. Self-contained SVG, no external assets.
inline std::string render_svg(std::span<const RiskCurve> curves) {
  if (curves.empty()) throw Error("render_svg: no curves");
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& c : curves) {
    if (c.points.empty()) throw Error("render_svg: curve without points");
    for (const auto& p : c.points) {
      if (!(p.mean_sse > 0.0) || p.n == 0) throw Error("render_svg: values must be positive for a log scale");
      xmin = std::min(xmin, std::log10(static_cast<double>(p.n)));
      xmax = std::max(xmax, std::log10(static_cast<double>(p.n)));
      ymin = std::min(ymin, std::log10(p.mean_sse));
      ymax = std::max(ymax, std::log10(p.mean_sse));
    }
  }
  const double xpad = std::max(0.05, 0.05 * (xmax - xmin));
  const double ypad = std::max(0.05, 0.08 * (ymax - ymin));
  xmin -= xpad, xmax += xpad, ymin -= ypad, ymax += ypad;

  constexpr double kWidth = 720, kHeight = 480;
  constexpr double kLeft = 80, kRight = 250, kTop = 40, kBottom = 60;
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto sx = [&](double lx) { return kLeft + (lx - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double ly) { return kTop + (ymax - ly) / (ymax - ymin) * ph; };
  static constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                             "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  using detail::svg_num;

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg_num(kWidth) + "\" height=\"" +
       svg_num(kHeight) + "\" viewBox=\"0 0 " + svg_num(kWidth) + " " + svg_num(kHeight) + "\">\n";
  s += "<title>Squared error versus tree size (log-log)</title>\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect x=\"" + svg_num(kLeft) + "\" y=\"" + svg_num(kTop) + "\" width=\"" + svg_num(pw) + "\" height=\"" +
       svg_num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";

  // Five evenly spaced ticks per axis in log space, labeled with raw values.
  for (int k = 0; k <= 4; ++k) {
    const double lx = xmin + (xmax - xmin) * k / 4.0;
    const double ly = ymin + (ymax - ymin) * k / 4.0;
    s += "<line x1=\"" + svg_num(sx(lx)) + "\" y1=\"" + svg_num(kTop + ph) + "\" x2=\"" + svg_num(sx(lx)) +
         "\" y2=\"" + svg_num(kTop + ph + 5) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + svg_num(sx(lx)) + "\" y=\"" + svg_num(kTop + ph + 20) + "\" text-anchor=\"middle\">" +
         detail::tick_label(std::pow(10.0, lx)) + "</text>\n";
    s += "<line x1=\"" + svg_num(kLeft - 5) + "\" y1=\"" + svg_num(sy(ly)) + "\" x2=\"" + svg_num(kLeft) +
         "\" y2=\"" + svg_num(sy(ly)) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + svg_num(kLeft - 8) + "\" y=\"" + svg_num(sy(ly) + 4) + "\" text-anchor=\"end\">" +
         detail::tick_label(std::pow(10.0, ly)) + "</text>\n";
  }
  s += "<text x=\"" + svg_num(kLeft + pw / 2) + "\" y=\"" + svg_num(kHeight - 15) +
       "\" text-anchor=\"middle\">n (nodes)</text>\n";
  s += "<text x=\"20\" y=\"" + svg_num(kTop + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " +
       svg_num(kTop + ph / 2) + ")\">mean squared error</text>\n";

  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const auto& c = curves[ci];
    const std::string color = kPalette[ci % std::size(kPalette)];
    s += "<g class=\"series\" stroke=\"" + color + "\" fill=\"" + color + "\">\n";
    for (const auto& p : c.points)
      s += "<circle cx=\"" + svg_num(sx(std::log10(static_cast<double>(p.n)))) + "\" cy=\"" +
           svg_num(sy(std::log10(p.mean_sse))) + "\" r=\"3.5\"/>\n";
    if (c.points.size() >= 3) {
      const double n0 = std::log10(static_cast<double>(c.points.front().n));
      const double n1 = std::log10(static_cast<double>(c.points.back().n));
      const double to_log10 = 1.0 / std::log(10.0);
      const auto fitted = [&](double lx) { return c.fit.intercept * to_log10 + c.fit.slope * lx; };
      s += "<line class=\"fit\" data-slope=\"" + detail::slope_text(c.fit.slope) + "\" x1=\"" + svg_num(sx(n0)) +
           "\" y1=\"" + svg_num(sy(fitted(n0))) + "\" x2=\"" + svg_num(sx(n1)) + "\" y2=\"" +
           svg_num(sy(fitted(n1))) + "\" stroke-width=\"1.5\"/>\n";
    }
    const double ly = kTop + 12 + 20.0 * static_cast<double>(ci);
    s += "<rect x=\"" + svg_num(kLeft + pw + 15) + "\" y=\"" + svg_num(ly - 9) + "\" width=\"10\" height=\"10\"/>\n";
    s += "<text stroke=\"none\" fill=\"black\" x=\"" + svg_num(kLeft + pw + 30) + "\" y=\"" + svg_num(ly) + "\">" +
         detail::svg_escape(curve_label(c)) + "</text>\n";
    s += "</g>\n";
  }
  s += "</g>\n</svg>\n";
  return s;
}

}  // namespace treeflow
