// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

namespace lrscale_cli {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
  bool markers_only = false;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
};

// Self-contained SVG line chart. Non-finite points (and non-positive ones on
// log axes) are skipped.
std::string svg_plot(const PlotSpec& spec, const std::vector<Series>& series);

// Shortest round-trip decimal form, as used throughout the CSV exports.
std::string num(double v);

}  // namespace lrscale_cli
