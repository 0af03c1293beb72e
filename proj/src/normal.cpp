#include "balance/normal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "balance/core.hpp"

namespace balance {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
}  // namespace

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double normal_sf(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

double log_normal_cdf(double x) {
  if (x > -20.0) return std::log(normal_cdf(x));
  // asymptotic Mills-ratio series; |x| >= 20 keeps the truncation below 1e-16
  const double x2 = x * x;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k <= 8; ++k) {
    term *= -(2.0 * k - 1.0) / x2;
    sum += term;
  }
  return -0.5 * x2 - std::log(-x) - kLogSqrt2Pi + std::log(sum);
}

namespace {

double acklam(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00, 2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double kLow = 0.02425;
  if (p < kLow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - kLow) return -acklam(1.0 - p);
  const double q = p - 0.5, r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile needs 0 < p < 1");
  if (p > 0.5) return normal_quantile_upper(1.0 - p);
  double x = acklam(p);
  x -= (normal_cdf(x) - p) / normal_pdf(x);
  return x;
}

double normal_quantile_upper(double q) {
  if (!(q > 0.0 && q < 1.0)) throw std::domain_error("normal_quantile_upper needs 0 < q < 1");
  if (q > 0.5) return -normal_quantile_upper(1.0 - q);
  double x = -acklam(q);
  x += (normal_sf(x) - q) / normal_pdf(x);
  return x;
}

QuadratureRule gauss_legendre(int order, double a, double b) {
  if (order < 1) throw std::invalid_argument("gauss_legendre needs order >= 1");
  QuadratureRule rule;
  rule.nodes.resize(std::size_t(order));
  rule.weights.resize(std::size_t(order));
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= order; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = order * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[std::size_t(i)] = -z;
    rule.nodes[std::size_t(order - 1 - i)] = z;
    rule.weights[std::size_t(i)] = w;
    rule.weights[std::size_t(order - 1 - i)] = w;
  }
  const double half_len = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (int i = 0; i < order; ++i) {
    rule.nodes[std::size_t(i)] = mid + half_len * rule.nodes[std::size_t(i)];
    rule.weights[std::size_t(i)] *= half_len;
  }
  return rule;
}

QuadratureRule gauss_hermite_normal(int order, double variance) {
  if (order < 1) throw std::invalid_argument("gauss_hermite_normal needs order >= 1");
  if (!(variance > 0.0)) throw std::invalid_argument("gauss_hermite_normal needs variance > 0");
  // Newton on orthonormal Hermite polynomials (physicists' weight exp(-x^2)).
  const int n = order;
  constexpr double kPim4 = 0.75112554446494248286;  // pi^{-1/4}
  std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
  double z = 0.0;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    if (i == 0) z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    else if (i == 1) z -= 1.14 * std::pow(double(n), 0.426) / z;
    else if (i == 2) z = 1.86 * z - 0.86 * x[0];
    else if (i == 3) z = 1.91 * z - 0.91 * x[1];
    else z = 2.0 * z - x[std::size_t(i - 2)];
    double pp = 0.0;
    for (int it = 0; it < 200; ++it) {
      double p1 = kPim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(double(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    x[std::size_t(i)] = z;
    x[std::size_t(n - 1 - i)] = -z;
    w[std::size_t(i)] = 2.0 / (pp * pp);
    w[std::size_t(n - 1 - i)] = w[std::size_t(i)];
  }
  QuadratureRule rule;
  rule.nodes.resize(std::size_t(n));
  rule.weights.resize(std::size_t(n));
  const double sd = std::sqrt(2.0 * variance);
  constexpr double kInvSqrtPi = 0.56418958354775628695;
  for (int i = 0; i < n; ++i) {
    // ascending order
    rule.nodes[std::size_t(i)] = -x[std::size_t(i)] * sd;
    rule.weights[std::size_t(i)] = w[std::size_t(i)] * kInvSqrtPi;
  }
  return rule;
}

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.27) return 1.0;
  double sum = 0.0, sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = sign * std::exp(-2.0 * j * j * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-18) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {
double stephens(double ne, double d) {
  const double s = std::sqrt(ne);
  return kolmogorov_sf((s + 0.12 + 0.11 / s) * d);
}
}  // namespace

double ks_normal_pvalue(std::vector<double> samples, double variance) {
  if (samples.empty()) return 1.0;
  std::sort(samples.begin(), samples.end());
  const double n = double(samples.size());
  const double sd = std::sqrt(variance);
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = normal_cdf(samples[i] / sd);
    d = std::max({d, f - double(i) / n, double(i + 1) / n - f});
  }
  return stephens(n, d);
}

double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) return 1.0;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = double(a.size()), nb = double(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(double(i) / na - double(j) / nb));
  }
  return stephens(na * nb / (na + nb), d);
}

}  // namespace balance
