#include "balance/hjb_fbsde.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "balance/core.hpp"
#include "balance/errors.hpp"
#include "balance/normal.hpp"

namespace balance {

namespace {

// Solves a tridiagonal system in place: sub a, diag b, super c, rhs d.
void thomas(std::vector<double>& a, std::vector<double>& b, std::vector<double>& c,
            std::vector<double>& d) {
  const std::size_t n = b.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    d[i] -= w * d[i - 1];
  }
  d[n - 1] /= b[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) d[i] = (d[i] - c[i] * d[i + 1]) / b[i];
}

// x / (e^x - 1)
double bernoulli(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - 0.5 * x;
  return x / std::expm1(x);
}

void derivative(const double* u, int J, double dx, std::vector<double>& ux) {
  ux.resize(std::size_t(J + 1));
  for (int j = 1; j < J; ++j) ux[std::size_t(j)] = (u[j + 1] - u[j - 1]) / (2.0 * dx);
  ux[0] = (u[1] - u[0]) / dx;
  ux[std::size_t(J)] = (u[J] - u[J - 1]) / dx;
}

// Trapezoid weights on the space grid.
double trapezoid(const double* f, int J, double dx) {
  double s = 0.5 * (f[0] + f[J]);
  for (int j = 1; j < J; ++j) s += f[j];
  return s * dx;
}

double time_trapezoid(const std::vector<double>& f, double dt) {
  double s = 0.5 * (f.front() + f.back());
  for (std::size_t k = 1; k + 1 < f.size(); ++k) s += f[k];
  return s * dt;
}

void check_grid(const HjbGrid& g) {
  if (g.K < 2 || g.J < 8 || !(g.L > 0.0)) throw std::invalid_argument("invalid HJB grid");
}

struct Moments {
  std::vector<double> y_norm;
  double x_norm_p = 0.0;
  double expected_yb = 0.0;
  double y1_norm_q = 0.0;
};

Moments grid_moments(const GridFunction& u, const GridFunction& m, double p) {
  const int K = u.K, J = u.J;
  const double dx = u.dx();
  Moments out;
  out.y_norm.resize(std::size_t(K + 1));
  std::vector<double> ux, f(std::size_t(J + 1)), uxx_m(std::size_t(K + 1));
  for (int k = 0; k <= K; ++k) {
    derivative(u.row(k), J, dx, ux);
    const double* mk = m.row(k);
    for (int j = 0; j <= J; ++j) f[std::size_t(j)] = ux[std::size_t(j)] * ux[std::size_t(j)] * mk[j];
    out.y_norm[std::size_t(k)] = std::sqrt(trapezoid(f.data(), J, dx));
    const double* uk = u.row(k);
    f[0] = f[std::size_t(J)] = 0.0;
    for (int j = 1; j < J; ++j) f[std::size_t(j)] = (uk[j + 1] - 2.0 * uk[j] + uk[j - 1]) / (dx * dx) * mk[j];
    uxx_m[std::size_t(k)] = trapezoid(f.data(), J, dx);
  }
  out.expected_yb = time_trapezoid(uxx_m, 1.0 / K);
  const double* m1 = m.row(K);
  for (int j = 0; j <= J; ++j) f[std::size_t(j)] = std::pow(std::abs(m.x(j)), p) * m1[j];
  out.x_norm_p = std::pow(trapezoid(f.data(), J, dx), 1.0 / p);
  const double q = p / (p - 1.0);
  derivative(u.row(K), J, dx, ux);
  for (int j = 0; j <= J; ++j) f[std::size_t(j)] = std::pow(std::abs(ux[std::size_t(j)]), q) * m1[j];
  out.y1_norm_q = std::pow(trapezoid(f.data(), J, dx), 1.0 / q);
  return out;
}

GridFunction feedback_drift_grid(const GridFunction& u, const std::vector<double>& lambda) {
  GridFunction drift(u.K, u.J, u.t0, u.t1, u.x0, u.x1);
  std::vector<double> ux;
  for (int k = 0; k <= u.K; ++k) {
    derivative(u.row(k), u.J, u.dx(), ux);
    double* row = drift.row(k);
    for (int j = 0; j <= u.J; ++j) row[j] = -lambda[std::size_t(k)] * ux[std::size_t(j)];
  }
  return drift;
}

PrimalReport primal_from(const Moments& mo, double delta, double dt) {
  PrimalReport r;
  r.expected_yb = mo.expected_yb;
  r.y_norm_q = mo.y1_norm_q;
  const double c = 1.0 / mo.y1_norm_q;
  std::vector<double> phi(mo.y_norm.size());
  for (std::size_t k = 0; k < phi.size(); ++k) phi[k] = phi_delta(c * mo.y_norm[k], delta);
  r.primal = c * mo.expected_yb - time_trapezoid(phi, dt);
  return r;
}

}  // namespace

double phi_delta(double y, double delta) {
  if (!(delta > 0.0)) return kC0 * y;
  if (y > delta * kC0) return kC0 * y - delta * kC0 * kC0 / 2.0;
  return y * y / (2.0 * delta);
}

GridFunction solve_hjb_backward(const std::vector<double>& lambda, double p, double gamma,
                                const HjbGrid& grid) {
  check_grid(grid);
  if (int(lambda.size()) != grid.K + 1)
    throw std::invalid_argument("lambda must have K + 1 samples");
  const int K = grid.K, J = grid.J;
  const double dt = grid.dt(), dx = grid.dx();
  GridFunction u(K, J, 0.0, 1.0, -grid.L, grid.L);
  for (int j = 0; j <= J; ++j) u.at(K, j) = gamma * std::pow(std::abs(u.x(j)), p);

  const std::size_t n = std::size_t(J - 1);  // interior unknowns 1 .. J-1
  std::vector<double> lo(n), di(n), up(n), rhs(n), guess(std::size_t(J + 1)), mid(std::size_t(J + 1));
  std::vector<double> cl(std::size_t(J + 1)), cc(std::size_t(J + 1)), cr(std::size_t(J + 1));
  constexpr int kPicard = 3;
  for (int k = K - 1; k >= 0; --k) {
    const double* next = u.row(k + 1);
    const double lam = 0.5 * (lambda[std::size_t(k)] + lambda[std::size_t(k + 1)]);
    std::copy(next, next + J + 1, guess.begin());
    for (int it = 0; it < kPicard; ++it) {
      for (int j = 0; j <= J; ++j) mid[std::size_t(j)] = 0.5 * (guess[std::size_t(j)] + next[j]);
      // A u = (rho/2) u_xx - v u_x with v = (lambda/2) q, q the midpoint slope
      for (int j = 1; j < J; ++j) {
        const double q = (mid[std::size_t(j + 1)] - mid[std::size_t(j - 1)]) / (2.0 * dx);
        const double v = 0.5 * lam * q;
        const double rho = std::max(1.0, std::abs(v) * dx);
        const double diff = 0.5 * rho / (dx * dx), conv = v / (2.0 * dx);
        cl[std::size_t(j)] = diff + conv;
        cc[std::size_t(j)] = -2.0 * diff;
        cr[std::size_t(j)] = diff - conv;
      }
      for (int j = 1; j < J; ++j) {
        const std::size_t i = std::size_t(j - 1);
        const double Au = cl[std::size_t(j)] * next[j - 1] + cc[std::size_t(j)] * next[j] +
                          cr[std::size_t(j)] * next[j + 1];
        rhs[i] = next[j] + 0.5 * dt * Au;
        lo[i] = -0.5 * dt * cl[std::size_t(j)];
        di[i] = 1.0 - 0.5 * dt * cc[std::size_t(j)];
        up[i] = -0.5 * dt * cr[std::size_t(j)];
      }
      // edges: u_0 = 2 u_1 - u_2 and u_J = 2 u_{J-1} - u_{J-2}
      di[0] += 2.0 * lo[0];
      up[0] -= lo[0];
      lo[0] = 0.0;
      di[n - 1] += 2.0 * up[n - 1];
      lo[n - 1] -= up[n - 1];
      up[n - 1] = 0.0;
      thomas(lo, di, up, rhs);
      for (std::size_t i = 0; i < n; ++i) guess[i + 1] = rhs[i];
      guess[0] = 2.0 * guess[1] - guess[2];
      guess[std::size_t(J)] = 2.0 * guess[std::size_t(J - 1)] - guess[std::size_t(J - 2)];
    }
    double* row = u.row(k);
    for (int j = 0; j <= J; ++j) {
      if (!std::isfinite(guess[std::size_t(j)]))
        throw StabilityError("HJB sweep produced a non-finite value at step " + std::to_string(k));
      row[j] = guess[std::size_t(j)];
    }
  }
  return u;
}

GridFunction solve_fp_forward(const GridFunction& drift, double sigma0_sq, FpReport* report) {
  if (!(sigma0_sq > 0.0)) throw std::invalid_argument("solve_fp_forward needs sigma0_sq > 0");
  if (!drift.all_finite()) throw std::invalid_argument("solve_fp_forward needs a finite drift");
  const int K = drift.K, J = drift.J;
  const double dt = drift.dt(), dx = drift.dx();
  GridFunction m(K, J, drift.t0, drift.t1, drift.x0, drift.x1);
  std::vector<double> W(std::size_t(J + 1), dx);
  W[0] = W[std::size_t(J)] = 0.5 * dx;
  {
    double* m0 = m.row(0);
    for (int j = 0; j <= J; ++j) m0[j] = std::exp(-m.x(j) * m.x(j) / (2.0 * sigma0_sq));
    const double mass = trapezoid(m0, J, dx);
    for (int j = 0; j <= J; ++j) m0[j] /= mass;
  }
  const std::size_t n = std::size_t(J + 1);
  std::vector<double> lo(n), di(n), up(n), rhs(n);
  std::vector<double> bp(static_cast<std::size_t>(J)), bm(static_cast<std::size_t>(J));
  constexpr double D = 0.5;
  FpReport rep;
  const int edge = std::max(1, J / 100);
  for (int k = 0; k < K; ++k) {
    const double* d0 = drift.row(k);
    const double* d1 = drift.row(k + 1);
    // Scharfetter-Gummel flux F = (D/dx) (B(-w) m_j - B(w) m_{j+1}), w = a dx / D
    for (int j = 0; j < J; ++j) {
      const double a = 0.25 * (d0[j] + d0[j + 1] + d1[j] + d1[j + 1]);
      const double w = a * dx / D;
      bm[std::size_t(j)] = D / dx * bernoulli(-w);
      bp[std::size_t(j)] = D / dx * bernoulli(w);
    }
    const double* prev = m.row(k);
    for (int j = 0; j <= J; ++j) {
      const std::size_t i = std::size_t(j);
      double diag = W[i] / dt, l = 0.0, r = 0.0;
      if (j < J) {  // outgoing flux through j + 1/2
        diag += bm[i];
        r = -bp[i];
      }
      if (j > 0) {  // incoming flux through j - 1/2
        diag += bp[i - 1];
        l = -bm[i - 1];
      }
      lo[i] = l;
      di[i] = diag;
      up[i] = r;
      rhs[i] = W[i] / dt * prev[j];
    }
    thomas(lo, di, up, rhs);
    double* row = m.row(k + 1);
    for (int j = 0; j <= J; ++j) row[j] = std::max(rhs[std::size_t(j)], 0.0);
    const double mass = trapezoid(row, J, dx);
    rep.max_mass_error = std::max(rep.max_mass_error, std::abs(mass - 1.0));
    double tail = 0.0;
    for (int j = 0; j < edge; ++j) tail += (row[j] + row[J - j]) * dx;
    rep.max_boundary_mass = std::max(rep.max_boundary_mass, tail);
  }
  if (rep.max_mass_error > 1e-4)
    throw MassLossError("Fokker-Planck mass drifted by " + std::to_string(rep.max_mass_error));
  if (report) *report = rep;
  return m;
}

FbsdeSolution fixed_point_solve(double p, double delta, const HjbGrid& grid,
                                const FixedPointOptions& options) {
  if (!(delta > 0.0)) throw DomainError("fixed_point_solve needs delta > 0");
  if (!(p >= 2.0 && p <= 16.0)) throw DomainError("fixed_point_solve needs 2 <= p <= 16");
  if (!(options.damping > 0.0 && options.damping <= 1.0))
    throw DomainError("damping must lie in (0, 1]");
  check_grid(grid);
  const int K = grid.K;
  const double cap = 1.0 / delta;
  std::vector<double> lambda(std::size_t(K + 1), std::min(cap, kC0));
  // start from the uncontrolled terminal law N(0, 1)
  double moment = 0.0;
  {
    const QuadratureRule gh = gauss_hermite_normal(64, 1.0 + grid.sigma0_sq());
    for (int i = 0; i < gh.order(); ++i)
      moment += gh.weights[std::size_t(i)] * std::pow(std::abs(gh.nodes[std::size_t(i)]), p);
  }
  double gamma = 1.0 / (p * std::pow(moment, (p - 1.0) / p));

  FbsdeSolution sol;
  std::vector<double> lambda_new(lambda.size());
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    GridFunction u = solve_hjb_backward(lambda, p, gamma, grid);
    GridFunction m = solve_fp_forward(feedback_drift_grid(u, lambda), grid.sigma0_sq(), &sol.fp);
    const Moments mo = grid_moments(u, m, p);
    for (int k = 0; k <= K; ++k) {
      const double y = mo.y_norm[std::size_t(k)];
      lambda_new[std::size_t(k)] = y > 0.0 ? std::min(kC0 / y, cap) : cap;
    }
    const double gamma_new = 1.0 / (p * std::pow(mo.x_norm_p, p - 1.0));
    double res = 0.0;
    for (int k = 0; k <= K; ++k)
      res = std::max(res, std::abs(lambda_new[std::size_t(k)] - lambda[std::size_t(k)]));
    const double gres = std::abs(gamma_new - gamma) / gamma;
    sol.lambda_residual = res;
    sol.gamma_residual = gres;
    sol.iterations = iter;
    if (res < options.tol && gres < options.tol) {
      sol.u = std::move(u);
      sol.m = std::move(m);
      // the reported multiplier is the one consistent with the final Y(t)
      sol.lambda = lambda_new;
      sol.y_norm = mo.y_norm;
      sol.gamma = gamma;
      sol.x_norm_p = mo.x_norm_p;
      std::vector<double> cost(std::size_t(K + 1));
      for (int k = 0; k <= K; ++k) {
        const double a = sol.lambda[std::size_t(k)] * sol.y_norm[std::size_t(k)];
        cost[std::size_t(k)] = a * a;
      }
      sol.value = sol.x_norm_p + 0.5 * delta * time_trapezoid(cost, grid.dt());
      const PrimalReport pr = primal_from(mo, delta, grid.dt());
      sol.primal = pr.primal;
      sol.gap = sol.value - sol.primal;
      sol.relative_gap = sol.gap / sol.value;
      return sol;
    }
    const double th = options.damping;
    for (int k = 0; k <= K; ++k)
      lambda[std::size_t(k)] = (1.0 - th) * lambda[std::size_t(k)] + th * lambda_new[std::size_t(k)];
    gamma = (1.0 - th) * gamma + th * gamma_new;
  }
  throw NoConvergence("fixed point did not converge in " + std::to_string(options.max_iter) +
                      " iterations (lambda residual " + std::to_string(sol.lambda_residual) +
                      ", gamma residual " + std::to_string(sol.gamma_residual) + ")");
}

PrimalReport primal_and_gap(const FbsdeSolution& sol, double p, double delta) {
  const Moments mo = grid_moments(sol.u, sol.m, p);
  PrimalReport r = primal_from(mo, delta, sol.u.dt());
  r.gap = sol.value - r.primal;
  r.relative_gap = r.gap / sol.value;
  return r;
}

double primal_for_profile(const std::vector<double>& lambda, double p, double delta, double gamma,
                          const HjbGrid& grid) {
  const GridFunction u = solve_hjb_backward(lambda, p, gamma, grid);
  const GridFunction m = solve_fp_forward(feedback_drift_grid(u, lambda), grid.sigma0_sq());
  return primal_from(grid_moments(u, m, p), delta, grid.dt()).primal;
}

namespace {

struct OdeRun {
  std::vector<double> lambda_new;
  std::vector<double> a, s;
  double gamma_new = 0.0;
  double value = 0.0;
};

// One sweep of the p = 2 reduction on N uniform steps: a(t) in closed form for
// the piecewise-linear lambda, s(t) by RK4.
OdeRun ode_sweep(const std::vector<double>& lambda, double gamma, double delta, double sigma0_sq) {
  const int N = int(lambda.size()) - 1;
  const double h = 1.0 / N;
  // Lambda(t) = int_t^1 lambda, exact for piecewise-linear lambda
  std::vector<double> tail(std::size_t(N + 1), 0.0);
  for (int i = N - 1; i >= 0; --i)
    tail[std::size_t(i)] = tail[std::size_t(i + 1)] + 0.5 * h * (lambda[std::size_t(i)] + lambda[std::size_t(i + 1)]);
  auto lam_at = [&](int i, double frac) {
    return (1.0 - frac) * lambda[std::size_t(i)] + frac * lambda[std::size_t(i + 1)];
  };
  auto a_at = [&](int i, double frac) {
    // integral from t_i + frac h to t_{i+1} of the linear piece
    const double piece = 0.5 * (1.0 - frac) * h * (lam_at(i, frac) + lambda[std::size_t(i + 1)]);
    return gamma / (1.0 + 2.0 * gamma * (tail[std::size_t(i + 1)] + piece));
  };
  OdeRun out;
  out.a.resize(std::size_t(N + 1));
  out.s.resize(std::size_t(N + 1));
  for (int i = 0; i <= N; ++i) out.a[std::size_t(i)] = gamma / (1.0 + 2.0 * gamma * tail[std::size_t(i)]);
  out.s[0] = sigma0_sq;
  for (int i = 0; i < N; ++i) {
    auto f = [&](double frac, double s) { return -4.0 * lam_at(i, frac) * a_at(i, frac) * s + 1.0; };
    const double s0 = out.s[std::size_t(i)];
    const double k1 = f(0.0, s0);
    const double k2 = f(0.5, s0 + 0.5 * h * k1);
    const double k3 = f(0.5, s0 + 0.5 * h * k2);
    const double k4 = f(1.0, s0 + h * k3);
    out.s[std::size_t(i + 1)] = s0 + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  out.lambda_new.resize(std::size_t(N + 1));
  std::vector<double> cost(std::size_t(N + 1));
  for (int i = 0; i <= N; ++i) {
    const double y = 2.0 * out.a[std::size_t(i)] * std::sqrt(out.s[std::size_t(i)]);
    out.lambda_new[std::size_t(i)] = std::min(kC0 / y, 1.0 / delta);
    const double al = lambda[std::size_t(i)] * y;
    cost[std::size_t(i)] = al * al;
  }
  out.gamma_new = 1.0 / (2.0 * std::sqrt(out.s[std::size_t(N)]));
  // Simpson for the control cost
  double acc = cost.front() + cost.back();
  for (int i = 1; i < N; ++i) acc += (i % 2 ? 4.0 : 2.0) * cost[std::size_t(i)];
  out.value = std::sqrt(out.s[std::size_t(N)]) + 0.5 * delta * acc * h / 3.0;
  return out;
}

OdeOracle ode_solve(double delta, double sigma0_sq, int N, double tol) {
  std::vector<double> lambda(std::size_t(N + 1), std::min(kC0, 1.0 / delta));
  double gamma = 0.5 / std::sqrt(1.0 + sigma0_sq);
  const double th = 0.5;
  for (int iter = 0; iter < 5000; ++iter) {
    const OdeRun run = ode_sweep(lambda, gamma, delta, sigma0_sq);
    double res = std::abs(run.gamma_new - gamma) / gamma;
    for (std::size_t i = 0; i < lambda.size(); ++i)
      res = std::max(res, std::abs(run.lambda_new[i] - lambda[i]));
    if (res < tol * 1e-3) {
      OdeOracle o;
      o.value = run.value;
      o.gamma = gamma;
      o.steps = N;
      o.lambda = lambda;
      for (int i = 0; i <= N; ++i) {
        o.t.push_back(double(i) / N);
        o.y_norm.push_back(2.0 * run.a[std::size_t(i)] * std::sqrt(run.s[std::size_t(i)]));
      }
      return o;
    }
    for (std::size_t i = 0; i < lambda.size(); ++i)
      lambda[i] = (1.0 - th) * lambda[i] + th * run.lambda_new[i];
    gamma = (1.0 - th) * gamma + th * run.gamma_new;
  }
  throw NoConvergence("p = 2 oracle fixed point did not converge");
}

}  // namespace

OdeOracle p2_ode_oracle(double delta, double sigma0_sq, double tol) {
  if (!(delta > 0.0)) throw DomainError("p2_ode_oracle needs delta > 0");
  if (!(sigma0_sq > 0.0)) throw DomainError("p2_ode_oracle needs sigma0_sq > 0");
  int N = 256;
  OdeOracle coarse = ode_solve(delta, sigma0_sq, N, tol);
  for (int round = 0; round < 10; ++round) {
    OdeOracle fine = ode_solve(delta, sigma0_sq, 2 * N, tol);
    if (std::abs(fine.value - coarse.value) < tol) return fine;
    coarse = std::move(fine);
    N *= 2;
  }
  throw NoConvergence("p = 2 oracle did not reach the step-doubling tolerance");
}

}  // namespace balance
