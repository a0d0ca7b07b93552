#pragma once

#include <string>
#include <utility>
#include <vector>

namespace nhse {

struct SpectrumPoint {
  double re = 0.0;
  double im = 0.0;
  double x_ipr = 0.0;
  bool thin = false;  ///< reference layer drawn lighter and smaller
};

struct SpectrumPanel {
  std::string title;
  std::vector<SpectrumPoint> points;
  std::vector<std::vector<std::pair<double, double>>> loops;  ///< gray polylines
};

/// Complex-plane scatter panels colored by x-IPR: red positive, blue negative, gray
/// within tau.
std::string spectrum_svg(const std::string& title, const std::vector<SpectrumPanel>& panels,
                         double tau, int columns = 4);

struct LineSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = true;
};

struct LinePanel {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  std::vector<LineSeries> series;
  std::vector<double> vlines;  ///< dashed vertical markers
};

std::string line_svg(const std::string& title, const std::vector<LinePanel>& panels,
                     int columns = 2);

/// Diverging color for a signed value scaled by `scale`; gray when |value| <= tau.
std::string skin_color(double value, double scale, double tau);

}  // namespace nhse
