#pragma once

#include <span>
#include <vector>

namespace balance {

double normal_pdf(double x);
double normal_cdf(double x);
// 1 - Phi(x) without cancellation for large x.
double normal_sf(double x);
// log Phi(x), accurate deep in the lower tail.
double log_normal_cdf(double x);

// Phi^{-1}(p): rational approximation plus one Newton step.
double normal_quantile(double p);
// Phi^{-1}(1 - q) for small q given directly.
double normal_quantile_upper(double q);

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int order() const { return int(nodes.size()); }
};

// Gauss-Legendre on [a, b].
QuadratureRule gauss_legendre(int order, double a = -1.0, double b = 1.0);
// Gauss-Hermite against N(0, variance): weights sum to 1.
QuadratureRule gauss_hermite_normal(int order, double variance);

// Composite Gauss-Legendre over consecutive breakpoints.
template <class F>
double integrate_panels(F&& f, std::span<const double> breaks, const QuadratureRule& ref) {
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    const double a = breaks[s], b = breaks[s + 1];
    if (!(b > a)) continue;
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    double acc = 0.0;
    for (int i = 0; i < ref.order(); ++i) acc += ref.weights[i] * f(mid + half * ref.nodes[i]);
    total += half * acc;
  }
  return total;
}

// Kolmogorov limiting survival function Q(lambda).
double kolmogorov_sf(double lambda);
// One-sample KS against N(0, variance); returns the p-value.
double ks_normal_pvalue(std::vector<double> samples, double variance);
// Two-sample KS p-value.
double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b);

}  // namespace balance
