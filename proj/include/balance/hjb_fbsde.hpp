#pragma once

#include <vector>

#include "balance/grid.hpp"

namespace balance {

struct HjbGrid {
  int K = 400;   // time steps on [0, 1]
  int J = 1600;  // space intervals on [-L, L]
  double L = 8.0;

  double dt() const { return 1.0 / K; }
  double dx() const { return 2.0 * L / J; }
  // Variance of the Gaussian standing in for the point mass at the origin.
  double sigma0_sq() const { return 4.0 * dt(); }
};

// Backward sweep of u_t - (lambda/2) u_x^2 + u_xx / 2 = 0, u(1, x) = gamma |x|^p.
// lambda holds K + 1 samples on the time nodes.
GridFunction solve_hjb_backward(const std::vector<double>& lambda, double p, double gamma,
                                const HjbGrid& grid);

struct FpReport {
  double max_mass_error = 0.0;
  double max_boundary_mass = 0.0;
};

// Forward Fokker-Planck for dX = drift dt + dB from N(0, sigma0_sq); drift is
// sampled on the (t, x) nodes.
GridFunction solve_fp_forward(const GridFunction& drift, double sigma0_sq,
                              FpReport* report = nullptr);

struct FbsdeSolution {
  GridFunction u;
  GridFunction m;
  std::vector<double> lambda;  // on the time nodes
  std::vector<double> y_norm;  // ||Y(t)||_2
  double gamma = 0.0;
  double x_norm_p = 0.0;  // ||X(1)||_p
  double value = 0.0;     // V_{p,delta}
  double primal = 0.0;    // P_{q,delta}
  double gap = 0.0;
  double relative_gap = 0.0;
  int iterations = 0;
  double lambda_residual = 0.0;
  double gamma_residual = 0.0;
  FpReport fp;
};

struct FixedPointOptions {
  double damping = 0.5;
  int max_iter = 500;
  double tol = 1e-5;
};

FbsdeSolution fixed_point_solve(double p, double delta, const HjbGrid& grid,
                                const FixedPointOptions& options = {});

// sup_{|a| <= c0} (a y - delta a^2 / 2).
double phi_delta(double y, double delta);

struct PrimalReport {
  double primal = 0.0;
  double gap = 0.0;
  double relative_gap = 0.0;
  double expected_yb = 0.0;  // E[Y B(1)] before normalization
  double y_norm_q = 0.0;     // ||Y(1)||_q used to normalize Y
};

// Dual objective of the normalized Y = u_x(1, X(1)) on the grid, with E[Y B(1)]
// from the Ito isometry, E[Y B(1)] = int int u_xx m dx dt.
PrimalReport primal_and_gap(const FbsdeSolution& sol, double p, double delta);

// Dual objective of the Y generated by an arbitrary positive lambda profile.
double primal_for_profile(const std::vector<double>& lambda, double p, double delta, double gamma,
                          const HjbGrid& grid);

struct OdeOracle {
  double value = 0.0;
  double gamma = 0.0;
  std::vector<double> t;
  std::vector<double> lambda;
  std::vector<double> y_norm;
  int steps = 0;
};

// Quadratic-ansatz reduction of the p = 2 fixed point to ODEs for a(t) and the
// variance s(t).
OdeOracle p2_ode_oracle(double delta, double sigma0_sq, double tol = 1e-8);

}  // namespace balance
