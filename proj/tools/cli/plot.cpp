// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0

#include "plot.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace lrscale_cli {
namespace {

constexpr double kW = 640, kH = 420;
constexpr double kLeft = 80, kRight = 160, kTop = 40, kBottom = 60;
constexpr std::array<const char*, 8> kColors{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                             "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream ss;
  ss.precision(prec);
  ss << v;
  return ss.str();
}

struct Axis {
  double lo = 0, hi = 1;
  bool log = false;
  double t(double v) const {
    const double x = log ? std::log10(v) : v;
    return (x - lo) / (hi - lo);
  }
};

Axis make_axis(std::vector<double> vals, bool log) {
  Axis a;
  a.log = log;
  if (log) {
    for (double& v : vals) v = std::log10(v);
  }
  if (vals.empty()) return a;
  auto [mn, mx] = std::minmax_element(vals.begin(), vals.end());
  a.lo = *mn;
  a.hi = *mx;
  if (a.hi - a.lo < 1e-12 * std::max(1.0, std::abs(a.hi))) {
    a.lo -= 0.5;
    a.hi += 0.5;
  } else {
    const double pad = 0.05 * (a.hi - a.lo);
    a.lo -= pad;
    a.hi += pad;
  }
  return a;
}

bool usable(double v, bool log) { return std::isfinite(v) && (!log || v > 0); }

}  // namespace

std::string num(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string svg_plot(const PlotSpec& spec, const std::vector<Series>& series) {
  std::vector<double> xs, ys;
  for (const auto& s : series) {
    for (auto [x, y] : s.points) {
      if (usable(x, spec.log_x) && usable(y, spec.log_y)) {
        xs.push_back(x);
        ys.push_back(y);
      }
    }
  }
  const Axis ax = make_axis(xs, spec.log_x);
  const Axis ay = make_axis(ys, spec.log_y);
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto px = [&](double x) { return kLeft + ax.t(x) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - ay.t(y)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
    << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
    << esc(spec.title) << "</text>\n";
  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"#333\"/>\n";

  // five ticks per axis, labelled in data units
  for (int i = 0; i <= 4; ++i) {
    const double f = i / 4.0;
    const double xv = ax.lo + f * (ax.hi - ax.lo);
    const double yv = ay.lo + f * (ay.hi - ay.lo);
    const double X = kLeft + f * pw, Y = kTop + (1.0 - f) * ph;
    o << "<line x1=\"" << X << "\" y1=\"" << kTop + ph << "\" x2=\"" << X << "\" y2=\""
      << kTop + ph + 5 << "\" stroke=\"#333\"/>\n";
    o << "<text x=\"" << X << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">"
      << fmt(ax.log ? std::pow(10.0, xv) : xv, 3) << "</text>\n";
    o << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << Y << "\" x2=\"" << kLeft << "\" y2=\"" << Y
      << "\" stroke=\"#333\"/>\n";
    o << "<text x=\"" << kLeft - 8 << "\" y=\"" << Y + 4 << "\" text-anchor=\"end\">"
      << fmt(ay.log ? std::pow(10.0, yv) : yv, 3) << "</text>\n";
  }
  o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 15 << "\" text-anchor=\"middle\">"
    << esc(spec.x_label + (spec.log_x ? " (log)" : "")) << "</text>\n";
  o << "<text transform=\"translate(18," << kTop + ph / 2
    << ") rotate(-90)\" text-anchor=\"middle\">" << esc(spec.y_label + (spec.log_y ? " (log)" : ""))
    << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kColors[k % kColors.size()];
    std::ostringstream path;
    bool first = true;
    for (auto [x, y] : s.points) {
      if (!usable(x, spec.log_x) || !usable(y, spec.log_y)) continue;
      if (s.markers_only) {
        o << "<circle cx=\"" << fmt(px(x), 6) << "\" cy=\"" << fmt(py(y), 6)
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
      } else {
        path << (first ? "M" : " L") << fmt(px(x), 6) << ',' << fmt(py(y), 6);
        first = false;
      }
    }
    if (!first) {
      o << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\"/>\n";
    }
    const double ly = kTop + 14 + 18.0 * static_cast<double>(k);
    o << "<rect x=\"" << kW - kRight + 12 << "\" y=\"" << ly - 9 << "\" width=\"10\" height=\"10\" fill=\""
      << color << "\"/>\n";
    o << "<text x=\"" << kW - kRight + 28 << "\" y=\"" << ly << "\">" << esc(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace lrscale_cli
