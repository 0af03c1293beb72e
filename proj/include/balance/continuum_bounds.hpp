#pragma once

#include <span>
#include <string>
#include <vector>

namespace balance {

double c0();

// sup over 0 < t <= T of sqrt(t) Phi^{-1}((1 + exp(-t/pi)) / 2).
double lower_bound(double T, int grid_points = 200);

// sqrt(2 T log(1/T)), 0 < T < 1.
double small_t_asymptotic(double T);

// (pi/2)^{3/2}, valid for every horizon.
double stationary_upper();

inline constexpr int kEigenGrid = 1024;

// Smallest Dirichlet eigenvalue of -(w f')' = lambda w f on (-r, r),
// w(x) = exp(-x^2 / (2T)), Richardson-extrapolated over grid_N and 2 grid_N.
double lambda_eigen(double T, double r, int grid_N = kEigenGrid);

// Unextrapolated eigenvalue of the half-interval discretization with N cells
// on [0, r] (Neumann at 0).
double lambda_discrete(double T, double r, int N);

// Same discretization on the full interval with 2N cells, by plain Sturm
// bisection on the symmetric tridiagonal matrix.
double lambda_discrete_full(double T, double r, int N);

struct EigenProblem {
  double T = 1.0;
  double r = 1.0;
  int N = kEigenGrid;
  double lambda = 0.0;
  std::vector<double> x;  // nodes on [-r, r]
  std::vector<double> f;  // eigenfunction, max-normalized, zero at +-r
};

EigenProblem solve_eigen_problem(double T, double r, int N = kEigenGrid);

// r with lambda_T(r) = target.
double invert_lambda(double T, double target, int grid_N = kEigenGrid);

// sqrt(T) * lambda_1^{-1}(T / (2 pi)).
double eigen_upper(double T, int grid_N = kEigenGrid);

// 2 sqrt(p (1-t) log(4 K^{-2} / (1-t))), K = c0 / (2p); throws FeasibilityError
// if the trapezoid profile of that radius is not admissible.
double trapezoid_radius(double t, double p);

// Left and right sides of the admissibility inequality for the trapezoid.
struct TrapezoidCheck {
  double tail_mass;
  double allowance;
  bool feasible() const { return tail_mass <= allowance; }
};
TrapezoidCheck trapezoid_feasibility(double t, double p, double r);

// Horizon-T bound from the trapezoid profile; NaN for T > 1.
double trapezoid_upper(double T, double p);

struct UpdetResult {
  double R = 0.0;
  std::vector<double> y;
};

// min |y|_inf subject to (mean |y_i - x_i|^p)^{1/p} <= budget.
UpdetResult updet_empirical(std::span<const double> x, double p, double budget);

// C (1-t)^{-p/(q-p)} Mq^{1/(q-p)}, C = (2 pi)^{p / (2(q-p))}.
double updet_moment_bound(double t, double p, double q, double Mq);

struct BoundEnvelope {
  double T = 0.0;
  double lower = 0.0;
  double upper_stationary = 0.0;
  double upper_eigen = 0.0;
  double upper_trapezoid = 0.0;  // NaN when not available
  double min_upper = 0.0;
  std::string min_source;
  double asymptotic = 0.0;  // NaN for T >= 1
};

// Throws EnvelopeViolation if lower > min_upper somewhere or the scaled lower
// bound fails to be monotone along the grid.
std::vector<BoundEnvelope> bound_envelope(std::span<const double> T_grid, double p = 5.0);

}  // namespace balance
