#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "dualwave/spectral.hpp"

namespace testing {

using namespace dualwave;

inline LevelSelection level(int n, Complex c = 1.0) { return LevelSelection{{LevelMember{Mode{{n, 0}, 0.0}, c}}}; }

inline SystemPtr box(std::vector<LevelSelection> levels, double length = 1.0, std::size_t grid = 0) {
  ModelSpec spec;
  spec.kind = ModelKind::box;
  spec.length = length;
  spec.levels = std::move(levels);
  spec.grid_points = grid;
  return build_model(spec);
}

inline SystemPtr ground_box() { return box({level(1)}); }
inline SystemPtr two_level_box() { return box({level(1), level(2)}); }
inline SystemPtr three_level_box() { return box({level(1), level(2), level(3)}); }

/// √2 sin(nπx) on the unit box.
inline double phi_box(int n, double x) { return std::sqrt(2.0) * std::sin(n * kPi * x); }

/// Composite Simpson rule on [a, b] with an even number of panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels = 2000) {
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Mean over an n-point uniform grid on [0, 2π); exact for trig polynomials
/// of degree below n.
inline double phase_average(const std::function<double(double)>& f, int n = 64) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += f(kTwoPi * i / n);
  return s / n;
}

}  // namespace testing
