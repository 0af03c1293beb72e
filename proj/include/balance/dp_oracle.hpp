#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "balance/normal.hpp"

namespace balance {

// Optimal expected terminal sup-norm V(k, x) for dimension 1 and horizon m,
// with N(0, 1) increments.
class DpN1 {
 public:
  explicit DpN1(int m, int quad_order = 32, double h = 1.0 / 256, double half_width = 6.0);

  int horizon() const { return m_; }
  double value(int k, double x) const;
  // Sign minimizing V(k + 1, x + eps z); ties to +1.
  int optimal_sign(int k, double x, double z) const;

 private:
  double level(int k, double x) const;
  double backward(int k, double x) const;

  int m_;
  double h_, half_width_;
  QuadratureRule ref_;
  QuadratureRule piece_;  // per grid cell
  std::vector<std::vector<double>> levels_;  // grid samples on [0, half_width] for 1 <= k < m
};

double dp_value_n1(int k, double x, int m, int quad_order = 32);

// V(1, y) for n = m = 2 and N(0, 1/2) increments, evaluated without a grid.
double dp_v1_n2(double y1, double y2, int quad_order = 32);

// V(0, (0, 0)) for n = m = 2.
double dp_value_n2(int quad_order);

struct ConvergenceRow {
  int order;
  double value;
  double change;  // |value - previous row|, 0 for the first row
};

std::vector<ConvergenceRow> dp_convergence_n2(std::span<const int> orders);

// All three levels of the n = m = 2 problem at arbitrary states. V(1, .) is
// tabulated for the k = 0 level.
class DpN2 {
 public:
  explicit DpN2(int quad_order = 24, double h = 0.03);

  double value(int k, double y1, double y2) const;
  int optimal_sign(int k, std::array<double, 2> y, std::array<double, 2> z) const;

 private:
  double v1_table(double y1, double y2) const;

  int q_;
  double h_, half_width_;
  int points_;
  std::vector<double> table_;
};

struct StatePair {
  std::vector<double> x;
  std::vector<double> y;
};

// Random pairs in [-box, box]^n.
std::vector<StatePair> random_state_pairs(int n, int count, std::uint64_t seed, double box = 2.0);

// max |V(k, x) - V(k, y)| / |x - y|_inf over the pairs (0 for x == y).
double dp_lipschitz_probe(int n, int k, std::span<const StatePair> pairs, int m = 2);

}  // namespace balance
