#pragma once

#include <cstddef>
#include <vector>

namespace balance {

// Scalar field on a uniform (time x space) grid, row-major in time.
struct GridFunction {
  double t0 = 0.0, t1 = 1.0;
  double x0 = -1.0, x1 = 1.0;
  int K = 0;  // time intervals
  int J = 0;  // space intervals
  std::vector<double> values;

  GridFunction() = default;
  GridFunction(int K_, int J_, double t0_, double t1_, double x0_, double x1_);

  double dt() const { return (t1 - t0) / K; }
  double dx() const { return (x1 - x0) / J; }
  double t(int k) const { return t0 + k * dt(); }
  double x(int j) const { return x0 + j * dx(); }

  double& at(int k, int j) { return values[std::size_t(k) * (J + 1) + std::size_t(j)]; }
  double at(int k, int j) const { return values[std::size_t(k) * (J + 1) + std::size_t(j)]; }
  double* row(int k) { return values.data() + std::size_t(k) * (J + 1); }
  const double* row(int k) const { return values.data() + std::size_t(k) * (J + 1); }

  // Bilinear interpolation, clamped to the grid box.
  double interpolate(double t, double x) const;
  bool all_finite() const;
};

}  // namespace balance
