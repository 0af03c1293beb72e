#include "balance/dp_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "balance/core.hpp"
#include "balance/parallel.hpp"

namespace balance {

namespace {

constexpr double kTail = 8.0;  // integrate Gaussians over +-8 standard deviations

// Catmull-Rom through samples on [0, (N-1) h]. The first cell uses a
// quadratic extrapolation so a one-sided slope at 0 is kept.
double catmull_rom(const std::vector<double>& v, double h, double x) {
  const int N = int(v.size());
  const double f = x / h;
  int j = std::min(int(f), N - 2);
  const double t = f - j;
  auto at = [&](int i) {
    if (i < 0) return 3.0 * v[0] - 3.0 * v[1] + v[2];
    if (i >= N) return 2.0 * v[std::size_t(N - 1)] - v[std::size_t(2 * (N - 1) - i)];
    return v[std::size_t(i)];
  };
  const double p0 = at(j - 1), p1 = at(j), p2 = at(j + 1), p3 = at(j + 2);
  return p1 + 0.5 * t * (p2 - p0 + t * (2 * p0 - 5 * p1 + 4 * p2 - p3 + t * (3 * (p1 - p2) + p3 - p0)));
}

std::vector<double> panel_breaks(std::vector<double> pts, double lo, double hi, double width) {
  pts.push_back(lo);
  pts.push_back(hi);
  std::vector<double> kept;
  for (double p : pts)
    if (p >= lo && p <= hi) kept.push_back(p);
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  std::vector<double> out{kept.front()};
  for (std::size_t i = 1; i < kept.size(); ++i) {
    const double a = out.back(), b = kept[i];
    const int pieces = std::max(1, int(std::ceil((b - a) / width)));
    for (int s = 1; s <= pieces; ++s) out.push_back(a + (b - a) * s / pieces);
  }
  return out;
}

// Integral of min(max(a, |y2 + z|), max(b, |y2 - z|)) against N(0, 1/2). The
// integrand is linear between the candidate breakpoints, so each piece is
// integrated in closed form.
double inner_exact(double a, double b, double y2) {
  const double s = std::sqrt(0.5);
  std::array<double, 9> c{-y2 - a, -y2 + a, y2 - b, y2 + b, y2 - a, y2 + a, -y2 - b, -y2 + b, 0.0};
  std::sort(c.begin(), c.end());
  auto f = [&](double z) {
    return std::min(std::max(a, std::abs(y2 + z)), std::max(b, std::abs(y2 - z)));
  };
  double total = 0.0;
  for (int i = -1; i < 9; ++i) {
    const bool left_open = i < 0, right_open = i == 8;
    const double l = left_open ? -std::numeric_limits<double>::infinity() : c[std::size_t(i)];
    const double u = right_open ? std::numeric_limits<double>::infinity() : c[std::size_t(i + 1)];
    // slivers carry no mass but would give an ill-conditioned slope
    if (!left_open && !right_open && !(u - l > 1e-12 * (1.0 + std::abs(l)))) continue;
    double p1, p2;
    if (left_open) {
      p1 = u - 2.0;
      p2 = u - 1.0;
    } else if (right_open) {
      p1 = l + 1.0;
      p2 = l + 2.0;
    } else {
      p1 = l + (u - l) / 3.0;
      p2 = l + 2.0 * (u - l) / 3.0;
    }
    const double beta = (f(p2) - f(p1)) / (p2 - p1);
    const double alpha = f(p1) - beta * p1;
    const double cl = left_open ? 0.0 : normal_cdf(l / s), cu = right_open ? 1.0 : normal_cdf(u / s);
    const double dl = left_open ? 0.0 : normal_pdf(l / s), du = right_open ? 0.0 : normal_pdf(u / s);
    total += alpha * (cu - cl) + beta * s * (dl - du);
  }
  return total;
}

double v1_exact(double y1, double y2, const QuadratureRule& ref) {
  const double s = std::sqrt(0.5);
  y1 = std::abs(y1);
  y2 = std::abs(y2);
  const double lim = kTail * s;
  const auto breaks =
      panel_breaks({-y1, y1, -y2, y2, y1 + y2, -y1 - y2, y1 - y2, y2 - y1, 0.0}, -lim, lim, 1.0);
  return integrate_panels(
      [&](double z1) {
        return inner_exact(std::abs(y1 + z1), std::abs(y1 - z1), y2) * normal_pdf(z1 / s) / s;
      },
      breaks, ref);
}

}  // namespace

DpN1::DpN1(int m, int quad_order, double h, double half_width)
    : m_(m),
      h_(h),
      half_width_(half_width),
      ref_(gauss_legendre(quad_order)),
      piece_(gauss_legendre(std::max(3, quad_order / 8))) {
  if (m < 1) throw std::invalid_argument("DpN1 needs m >= 1");
  if (quad_order < 2) throw std::invalid_argument("DpN1 needs quad_order >= 2");
  const int N = int(std::lround(half_width / h)) + 1;
  levels_.resize(std::size_t(m));
  for (int k = m - 1; k >= 1; --k) {
    std::vector<double> grid(static_cast<std::size_t>(N));
#pragma omp parallel for schedule(static) num_threads(worker_count())
    for (int j = 0; j < N; ++j) grid[std::size_t(j)] = backward(k, j * h_);
    levels_[std::size_t(k)] = std::move(grid);
  }
}

double DpN1::level(int k, double x) const {
  x = std::abs(x);
  if (k == m_) return x;
  const auto& v = levels_[std::size_t(k)];
  if (x >= half_width_) return x + (v.back() - half_width_);
  return catmull_rom(v, h_, x);
}

double DpN1::backward(int k, double x) const {
  x = std::abs(x);
  auto integrand = [&](double z) {
    return std::min(level(k + 1, x + z), level(k + 1, x - z)) * normal_pdf(z);
  };
  if (k + 1 == m_) {
    // the integrand is even in z; its only kink on z > 0 is at z = x
    return 2.0 * integrate_panels(integrand, panel_breaks({x}, 0.0, kTail, 0.5), ref_);
  }
  // Pieces on which both interpolants are single cubics, split further where
  // the minimum switches branch.
  std::vector<double> pts;
  pts.reserve(std::size_t(3.0 * kTail / h_) + 16);
  for (double z = std::fmod(x, h_); z <= kTail; z += h_) pts.push_back(z);
  for (double z = h_ - std::fmod(x, h_); z <= kTail; z += h_) pts.push_back(z);
  auto gap = [&](double z) { return level(k + 1, x + z) - level(k + 1, x - z); };
  std::sort(pts.begin(), pts.end());
  const std::size_t lattice = pts.size();
  double a = 1e-12, ga = gap(a);
  for (std::size_t i = 0; i < lattice; ++i) {
    const double b = pts[i];
    if (b <= a) continue;
    const double gb = gap(b);
    if ((ga < 0.0) != (gb < 0.0)) {
      double lo = a, hi = b;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        ((gap(mid) < 0.0) == (ga < 0.0) ? lo : hi) = mid;
      }
      pts.push_back(0.5 * (lo + hi));
    }
    a = b;
    ga = gb;
  }
  pts.push_back(x);
  return 2.0 * integrate_panels(integrand, panel_breaks(std::move(pts), 0.0, kTail, 0.5), piece_);
}

double DpN1::value(int k, double x) const {
  if (k < 0 || k > m_) throw std::invalid_argument("DpN1::value needs 0 <= k <= m");
  if (k == m_) return std::abs(x);
  return backward(k, x);
}

int DpN1::optimal_sign(int k, double x, double z) const {
  return level(k + 1, x - z) < level(k + 1, x + z) ? -1 : 1;
}

double dp_value_n1(int k, double x, int m, int quad_order) {
  if (k == m) return std::abs(x);
  return DpN1(m, quad_order).value(k, x);
}

double dp_v1_n2(double y1, double y2, int quad_order) {
  return v1_exact(y1, y2, gauss_legendre(quad_order));
}

double dp_value_n2(int quad_order) {
  if (quad_order < 8) throw std::invalid_argument("dp_value_n2 needs quad_order >= 8");
  const QuadratureRule ref = gauss_legendre(quad_order);
  // V(1, .) is invariant under coordinate swaps and sign flips: integrate the
  // wedge 0 <= theta <= pi/4 in polar coordinates and multiply by 8.
  const QuadratureRule theta = gauss_legendre(quad_order, 0.0, kPi / 4);
  const double lim = kTail * std::sqrt(0.5);
  const auto rbreaks = panel_breaks({}, 0.0, lim, 1.0);
  std::vector<double> rows(std::size_t(theta.order()));
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
  for (int i = 0; i < theta.order(); ++i) {
    const double c = std::cos(theta.nodes[std::size_t(i)]), s = std::sin(theta.nodes[std::size_t(i)]);
    rows[std::size_t(i)] = integrate_panels(
        [&](double r) { return v1_exact(r * c, r * s, ref) * std::exp(-r * r) * r / kPi; }, rbreaks,
        ref);
  }
  double total = 0.0;
  for (int i = 0; i < theta.order(); ++i) total += theta.weights[std::size_t(i)] * rows[std::size_t(i)];
  return 8.0 * total;
}

std::vector<ConvergenceRow> dp_convergence_n2(std::span<const int> orders) {
  std::vector<ConvergenceRow> out;
  for (int q : orders) {
    const double v = dp_value_n2(q);
    out.push_back({q, v, out.empty() ? 0.0 : std::abs(v - out.back().value)});
  }
  return out;
}

DpN2::DpN2(int quad_order, double h)
    : q_(quad_order), h_(h), half_width_(6.0 / std::sqrt(2.0)) {
  points_ = int(std::ceil(half_width_ / h_)) + 1;
  half_width_ = (points_ - 1) * h_;
  const QuadratureRule ref = gauss_legendre(quad_order);
  table_.assign(std::size_t(points_) * std::size_t(points_), 0.0);
  const int P = points_;
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
  for (int i = 0; i < P; ++i)
    for (int j = 0; j <= i; ++j) {
      const double v = v1_exact(i * h_, j * h_, ref);
      table_[std::size_t(i) * std::size_t(P) + std::size_t(j)] = v;
      table_[std::size_t(j) * std::size_t(P) + std::size_t(i)] = v;
    }
}

double DpN2::v1_table(double y1, double y2) const {
  y1 = std::abs(y1);
  y2 = std::abs(y2);
  const double c1 = std::min(y1, half_width_), c2 = std::min(y2, half_width_);
  const int P = points_;
  // even across the axes, linear continuation past the last grid line
  auto fold = [P](int i, double* sign_scale) {
    if (i < 0) return -i;
    if (i >= P) {
      *sign_scale = -1.0;
      return 2 * (P - 1) - i;
    }
    return i;
  };
  auto sample = [&](int i, int j) {
    double si = 1.0, sj = 1.0;
    const int a = fold(i, &si), b = fold(j, &sj);
    auto raw = [&](int u, int v) { return table_[std::size_t(u) * std::size_t(P) + std::size_t(v)]; };
    if (si > 0 && sj > 0) return raw(a, b);
    if (si < 0 && sj > 0) return 2.0 * raw(P - 1, b) - raw(a, b);
    if (si > 0 && sj < 0) return 2.0 * raw(a, P - 1) - raw(a, b);
    return 2.0 * (2.0 * raw(P - 1, P - 1) - raw(a, P - 1)) - (2.0 * raw(P - 1, b) - raw(a, b));
  };
  auto cr = [](double t, double p0, double p1, double p2, double p3) {
    return p1 + 0.5 * t * (p2 - p0 + t * (2 * p0 - 5 * p1 + 4 * p2 - p3 + t * (3 * (p1 - p2) + p3 - p0)));
  };
  const double f1 = c1 / h_, f2 = c2 / h_;
  const int i = std::min(int(f1), P - 2), j = std::min(int(f2), P - 2);
  const double t1 = f1 - i, t2 = f2 - j;
  double rows[4];
  for (int a = 0; a < 4; ++a)
    rows[a] = cr(t2, sample(i + a - 1, j - 1), sample(i + a - 1, j), sample(i + a - 1, j + 1),
                 sample(i + a - 1, j + 2));
  const double inside = cr(t1, rows[0], rows[1], rows[2], rows[3]);
  return inside + (std::max(y1, y2) - std::max(c1, c2));
}

double DpN2::value(int k, double y1, double y2) const {
  if (k == 2) return std::max(std::abs(y1), std::abs(y2));
  if (k == 1) return v1_exact(y1, y2, gauss_legendre(q_));
  if (k != 0) throw std::invalid_argument("DpN2::value needs 0 <= k <= 2");
  const double s = std::sqrt(0.5), lim = kTail * s;
  const QuadratureRule ref = gauss_legendre(8);
  const auto b1 = panel_breaks({0.0, y1, -y1}, -lim, lim, 1.0);
  const auto b2 = panel_breaks({0.0, y2, -y2}, -lim, lim, 1.0);
  return integrate_panels(
      [&](double z1) {
        const double w1 = normal_pdf(z1 / s) / s;
        return w1 * integrate_panels(
                        [&](double z2) {
                          const double a = v1_table(y1 + z1, y2 + z2);
                          const double b = v1_table(y1 - z1, y2 - z2);
                          return std::min(a, b) * normal_pdf(z2 / s) / s;
                        },
                        b2, ref);
      },
      b1, ref);
}

int DpN2::optimal_sign(int k, std::array<double, 2> y, std::array<double, 2> z) const {
  const double plus = value(k + 1, y[0] + z[0], y[1] + z[1]);
  const double minus = value(k + 1, y[0] - z[0], y[1] - z[1]);
  return minus < plus ? -1 : 1;
}

std::vector<StatePair> random_state_pairs(int n, int count, std::uint64_t seed, double box) {
  RngStream rng(seed, 0x6470ULL);
  std::vector<StatePair> out(static_cast<std::size_t>(count));
  for (auto& p : out) {
    p.x.resize(std::size_t(n));
    p.y.resize(std::size_t(n));
    for (int i = 0; i < n; ++i) p.x[std::size_t(i)] = box * (2.0 * rng.uniform() - 1.0);
    for (int i = 0; i < n; ++i) p.y[std::size_t(i)] = box * (2.0 * rng.uniform() - 1.0);
  }
  return out;
}

double dp_lipschitz_probe(int n, int k, std::span<const StatePair> pairs, int m) {
  if (n < 1 || n > 2) throw std::invalid_argument("dp_lipschitz_probe needs n <= 2");
  if (n == 2 && m != 2) throw std::invalid_argument("dp_lipschitz_probe for n = 2 needs m = 2");
  double worst = 0.0;
  auto ratio = [](double dv, const StatePair& p) {
    double d = 0.0;
    for (std::size_t i = 0; i < p.x.size(); ++i) d = std::max(d, std::abs(p.x[i] - p.y[i]));
    return d == 0.0 ? 0.0 : std::abs(dv) / d;
  };
  if (n == 1) {
    const DpN1 dp(m);
    for (const auto& p : pairs) worst = std::max(worst, ratio(dp.value(k, p.x[0]) - dp.value(k, p.y[0]), p));
    return worst;
  }
  const DpN2 dp;
  std::vector<double> r(pairs.size());
  const long P = long(pairs.size());
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
  for (long i = 0; i < P; ++i) {
    const auto& p = pairs[std::size_t(i)];
    r[std::size_t(i)] = ratio(dp.value(k, p.x[0], p.x[1]) - dp.value(k, p.y[0], p.y[1]), p);
  }
  for (double v : r) worst = std::max(worst, v);
  return worst;
}

}  // namespace balance
