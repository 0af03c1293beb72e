#include "balance/continuum_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "balance/core.hpp"
#include "balance/errors.hpp"
#include "balance/normal.hpp"
#include "balance/parallel.hpp"

namespace balance {

double c0() { return kC0; }

namespace {

// sqrt(t) Phi^{-1}((1 + e^{-t/pi}) / 2)
double lower_profile(double t) {
  const double q = -std::expm1(-t / kPi) / 2.0;
  if (q >= 0.5) return 0.0;
  return std::sqrt(t) * normal_quantile_upper(q);
}

}  // namespace

double lower_bound(double T, int grid_points) {
  if (!(T > 0.0)) throw DomainError("lower_bound needs T > 0");
  if (grid_points < 3) throw std::invalid_argument("lower_bound needs at least 3 grid points");
  constexpr double kDecades = 10.0;
  std::vector<double> t(static_cast<std::size_t>(grid_points + 1));
  for (int i = 0; i < grid_points; ++i)
    t[std::size_t(i)] = T * std::pow(10.0, -kDecades * (1.0 - double(i) / (grid_points - 1)));
  t[std::size_t(grid_points)] = T;
  std::size_t best = 0;
  double best_val = -1.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double v = lower_profile(t[i]);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  // golden-section refinement on the bracketing cells
  double a = t[best == 0 ? 0 : best - 1];
  double b = t[std::min(best + 1, t.size() - 1)];
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = lower_profile(x1), f2 = lower_profile(x2);
  for (int it = 0; it < 200 && (b - a) > 1e-15 * b; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = lower_profile(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = lower_profile(x1);
    }
  }
  return std::max({best_val, f1, f2});
}

double small_t_asymptotic(double T) {
  if (!(T > 0.0) || T >= 1.0) throw DomainError("small_t_asymptotic needs 0 < T < 1");
  return std::sqrt(2.0 * T * std::log(1.0 / T));
}

double stationary_upper() { return std::pow(kPi / 2.0, 1.5); }

namespace {

void check_eigen_args(double T, double r, int N) {
  if (!(T > 0.0)) throw DomainError("eigenvalue problem needs T > 0");
  if (!(r > 0.0)) throw DomainError("eigenvalue problem needs r > 0");
  if (N < 64) throw std::invalid_argument("eigenvalue problem needs grid_N >= 64");
}

// Half-interval operator factored as L D L^T (unit lower bidiagonal L), taken
// from the bidiagonal square root of the mass-scaled stiffness matrix.
void half_factor(double T, double r, int N, std::vector<double>& D, std::vector<double>& L) {
  const double h = r / N;
  auto w = [T](double x) { return std::exp(-x * x / (2.0 * T)); };
  D.assign(std::size_t(N), 0.0);
  L.assign(std::size_t(N > 0 ? N - 1 : 0), 0.0);
  for (int j = 0; j < N; ++j) {
    const double c = w((j + 0.5) * h) / h;
    const double Mj = w(j * h) * h * (j == 0 ? 0.5 : 1.0);
    const double a = -std::sqrt(c / Mj);
    D[std::size_t(j)] = a * a;
    if (j + 1 < N) {
      const double b = std::sqrt(c / (w((j + 1) * h) * h));
      L[std::size_t(j)] = b / a;
    }
  }
}

// Number of eigenvalues of L D L^T below sigma (stationary qd transform).
int count_below(const std::vector<double>& D, const std::vector<double>& L, double sigma) {
  const std::size_t n = D.size();
  int neg = 0;
  double s = -sigma;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double dp = D[i] + s;
    if (dp < 0.0) ++neg;
    if (dp == 0.0) dp = -std::numeric_limits<double>::min();
    const double lp = D[i] * L[i] / dp;
    s = lp * L[i] * s - sigma;
  }
  if (D[n - 1] + s < 0.0) ++neg;
  return neg;
}

template <class Count>
double bisect_smallest(Count count) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; count(hi) < 1; ++it) {
    hi *= 2.0;
    if (it > 2000) throw ConvergenceError("no eigenvalue bracket");
  }
  for (int it = 0; it < 400 && hi - lo > 4e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (count(mid) >= 1)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

// Full-interval symmetric tridiagonal: diagonal d, off-diagonal e.
void full_matrix(double T, double r, int N, std::vector<double>& d, std::vector<double>& e,
                 std::vector<double>& mass) {
  const double h = r / N;
  const int n = 2 * N - 1;
  auto w = [T](double x) { return std::exp(-x * x / (2.0 * T)); };
  d.assign(std::size_t(n), 0.0);
  e.assign(std::size_t(n - 1), 0.0);
  mass.assign(std::size_t(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const double x = -r + (i + 1) * h;
    mass[std::size_t(i)] = w(x) * h;
  }
  for (int i = 0; i < n; ++i) {
    const double x = -r + (i + 1) * h;
    const double cl = w(x - 0.5 * h) / h, cr = w(x + 0.5 * h) / h;
    d[std::size_t(i)] = (cl + cr) / mass[std::size_t(i)];
    if (i + 1 < n)
      e[std::size_t(i)] = -cr / std::sqrt(mass[std::size_t(i)] * mass[std::size_t(i + 1)]);
  }
}

}  // namespace

double lambda_discrete(double T, double r, int N) {
  check_eigen_args(T, r, N);
  std::vector<double> D, L;
  half_factor(T, r, N, D, L);
  return bisect_smallest([&](double s) { return count_below(D, L, s); });
}

double lambda_discrete_full(double T, double r, int N) {
  check_eigen_args(T, r, N);
  std::vector<double> d, e, mass;
  full_matrix(T, r, N, d, e, mass);
  return bisect_smallest([&](double s) {
    int neg = 0;
    double q = d[0] - s;
    if (q < 0.0) ++neg;
    for (std::size_t i = 1; i < d.size(); ++i) {
      if (q == 0.0) q = std::numeric_limits<double>::min();
      q = d[i] - s - e[i - 1] * e[i - 1] / q;
      if (q < 0.0) ++neg;
    }
    return neg;
  });
}

double lambda_eigen(double T, double r, int grid_N) {
  const double coarse = lambda_discrete(T, r, grid_N);
  const double fine = lambda_discrete(T, r, 2 * grid_N);
  const double extrapolated = (4.0 * fine - coarse) / 3.0;
  if (std::abs(extrapolated - fine) > 1e-4 * std::abs(extrapolated))
    throw ConvergenceError("eigenvalue not resolved at grid_N = " + std::to_string(grid_N));
  return extrapolated;
}

EigenProblem solve_eigen_problem(double T, double r, int N) {
  check_eigen_args(T, r, N);
  EigenProblem out;
  out.T = T;
  out.r = r;
  out.N = N;
  out.lambda = lambda_eigen(T, r, N);
  std::vector<double> d, e, mass;
  full_matrix(T, r, N, d, e, mass);
  const std::size_t n = d.size();
  // inverse iteration with zero shift; the matrix is positive definite
  std::vector<double> v(n, 1.0), c(n), rhs(n);
  for (int it = 0; it < 30; ++it) {
    rhs = v;
    double denom = d[0];
    c[0] = n > 1 ? e[0] / denom : 0.0;
    rhs[0] /= denom;
    for (std::size_t i = 1; i < n; ++i) {
      denom = d[i] - e[i - 1] * c[i - 1];
      if (i + 1 < n) c[i] = e[i] / denom;
      rhs[i] = (rhs[i] - e[i - 1] * rhs[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
    double norm = 0.0;
    for (double x : rhs) norm = std::max(norm, std::abs(x));
    for (std::size_t i = 0; i < n; ++i) v[i] = rhs[i] / norm;
  }
  out.x.resize(n + 2);
  out.f.assign(n + 2, 0.0);
  const double h = r / N;
  for (std::size_t i = 0; i < n + 2; ++i) out.x[i] = -r + double(i) * h;
  out.x.back() = r;
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.f[i + 1] = v[i] / std::sqrt(mass[i]);
    if (std::abs(out.f[i + 1]) > std::abs(peak)) peak = out.f[i + 1];
  }
  for (double& f : out.f) f /= peak;
  return out;
}

double invert_lambda(double T, double target, int grid_N) {
  if (!(T > 0.0)) throw DomainError("invert_lambda needs T > 0");
  if (!(target > 0.0)) throw DomainError("invert_lambda needs target > 0");
  // lambda_T(r) = lambda_1(r / sqrt(T)) / T
  const double goal = T * target;
  auto lam = [grid_N](double rho) { return lambda_eigen(1.0, rho, grid_N); };
  double lo = 1.0, hi = 1.0;
  for (int it = 0; lam(lo) < goal; ++it) {
    lo *= 0.5;
    if (it > 60) throw ConvergenceError("invert_lambda: target above the bracket");
  }
  for (int it = 0; lam(hi) > goal; ++it) {
    hi *= 1.5;
    if (hi > 36.0) throw ConvergenceError("invert_lambda: target below the bracket");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double v = lam(mid);
    if (std::abs(v - goal) <= 1e-9 * goal || hi - lo <= 1e-13 * hi) return mid * std::sqrt(T);
    if (v > goal)
      lo = mid;
    else
      hi = mid;
  }
  throw ConvergenceError("invert_lambda: no convergence after 200 bisections");
}

double eigen_upper(double T, int grid_N) {
  if (!(T > 0.0)) throw DomainError("eigen_upper needs T > 0");
  return invert_lambda(T, 1.0 / (2.0 * kPi), grid_N);
}

TrapezoidCheck trapezoid_feasibility(double t, double p, double r) {
  const double K = kC0 / (2.0 * p);
  const double sd = std::sqrt(1.0 - t);
  const double half = normal_sf(r / (2.0 * sd));
  TrapezoidCheck chk;
  chk.tail_mass = half - normal_sf(r / sd);
  chk.allowance = std::pow(K * r / 2.0, p) * (0.5 - half);
  return chk;
}

double trapezoid_radius(double t, double p) {
  if (!(t >= 0.0 && t < 1.0)) throw DomainError("trapezoid_radius needs 0 <= t < 1");
  if (!(p >= 2.0)) throw DomainError("trapezoid_radius needs p >= 2");
  const double K = kC0 / (2.0 * p);
  const double s = 1.0 - t;
  const double r = 2.0 * std::sqrt(p * s * std::log(4.0 / (K * K * s)));
  if (!trapezoid_feasibility(t, p, r).feasible())
    throw FeasibilityError("trapezoid profile not admissible at t = " + std::to_string(t));
  return r;
}

double trapezoid_upper(double T, double p) {
  if (!(T > 0.0)) throw DomainError("trapezoid_upper needs T > 0");
  if (T > 1.0) return std::numeric_limits<double>::quiet_NaN();
  return trapezoid_radius(1.0 - T, p);
}

UpdetResult updet_empirical(std::span<const double> x, double p, double budget) {
  if (!(p >= 1.0)) throw DomainError("updet_empirical needs p >= 1");
  if (!(budget >= 0.0)) throw DomainError("updet_empirical needs budget >= 0");
  UpdetResult out;
  double top = 0.0;
  for (double v : x) top = std::max(top, std::abs(v));
  auto cost = [&](double R) {
    double acc = 0.0;
    for (double v : x) {
      const double e = std::abs(v) - R;
      if (e > 0.0) acc += std::pow(e, p);
    }
    return std::pow(acc / double(x.size()), 1.0 / p);
  };
  double R = top;
  if (!x.empty() && budget > 0.0) {
    if (cost(0.0) <= budget) {
      R = 0.0;
    } else {
      double lo = 0.0, hi = top;
      for (int it = 0; it < 200 && hi - lo > 1e-16 * top; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (cost(mid) <= budget)
          hi = mid;
        else
          lo = mid;
      }
      R = hi;
    }
  }
  out.R = R;
  out.y.reserve(x.size());
  for (double v : x) out.y.push_back(std::clamp(v, -R, R));
  return out;
}

double updet_moment_bound(double t, double p, double q, double Mq) {
  if (!(q > p)) throw DomainError("updet_moment_bound needs q > p");
  if (!(p >= 2.0)) throw DomainError("updet_moment_bound needs p >= 2");
  if (!(t < 1.0)) throw DomainError("updet_moment_bound needs t < 1");
  if (!(Mq > 0.0)) throw DomainError("updet_moment_bound needs Mq > 0");
  const double C = std::pow(2.0 * kPi, p / (2.0 * (q - p)));
  return C * std::pow(1.0 - t, -p / (q - p)) * std::pow(Mq, 1.0 / (q - p));
}

std::vector<BoundEnvelope> bound_envelope(std::span<const double> T_grid, double p) {
  for (std::size_t i = 0; i < T_grid.size(); ++i) {
    if (!(T_grid[i] > 0.0)) throw std::invalid_argument("bound_envelope needs positive horizons");
    if (i > 0 && !(T_grid[i] > T_grid[i - 1]))
      throw std::invalid_argument("bound_envelope needs a sorted horizon grid");
  }
  const long n = long(T_grid.size());
  std::vector<BoundEnvelope> out(T_grid.size());
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
  for (long i = 0; i < n; ++i) {
    BoundEnvelope e;
    const double T = T_grid[std::size_t(i)];
    e.T = T;
    e.lower = lower_bound(T);
    e.upper_stationary = stationary_upper();
    e.upper_eigen = eigen_upper(T);
    e.upper_trapezoid = trapezoid_upper(T, p);
    e.min_upper = e.upper_stationary;
    e.min_source = "stationary";
    if (e.upper_eigen < e.min_upper) {
      e.min_upper = e.upper_eigen;
      e.min_source = "eigen";
    }
    if (std::isfinite(e.upper_trapezoid) && e.upper_trapezoid < e.min_upper) {
      e.min_upper = e.upper_trapezoid;
      e.min_source = "trapezoid";
    }
    e.asymptotic = T < 1.0 ? small_t_asymptotic(T) : std::numeric_limits<double>::quiet_NaN();
    out[std::size_t(i)] = e;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].lower > out[i].min_upper)
      throw EnvelopeViolation("lower bound exceeds upper bound at T = " + std::to_string(out[i].T));
    if (i > 0) {
      const double prev = out[i - 1].lower / std::sqrt(out[i - 1].T);
      const double cur = out[i].lower / std::sqrt(out[i].T);
      if (cur > prev * (1.0 + 1e-12))
        throw EnvelopeViolation("scaled lower bound increases at T = " + std::to_string(out[i].T));
    }
  }
  return out;
}

}  // namespace balance
