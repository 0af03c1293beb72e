#include "balance/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include <omp.h>

#include "balance/parallel.hpp"

namespace balance {

GridFunction::GridFunction(int K_, int J_, double t0_, double t1_, double x0_, double x1_)
    : t0(t0_), t1(t1_), x0(x0_), x1(x1_), K(K_), J(J_) {
  if (K_ < 1 || J_ < 2 || !(t1_ > t0_) || !(x1_ > x0_))
    throw std::invalid_argument("GridFunction needs K >= 1, J >= 2 and nonempty ranges");
  values.assign(std::size_t(K_ + 1) * std::size_t(J_ + 1), 0.0);
}

double GridFunction::interpolate(double t, double x) const {
  const double ft = std::clamp((t - t0) / dt(), 0.0, double(K));
  const double fx = std::clamp((x - x0) / dx(), 0.0, double(J));
  const int k = std::min(int(ft), K - 1);
  const int j = std::min(int(fx), J - 1);
  const double a = ft - k, c = fx - j;
  return (1 - a) * ((1 - c) * at(k, j) + c * at(k, j + 1)) +
         a * ((1 - c) * at(k + 1, j) + c * at(k + 1, j + 1));
}

bool GridFunction::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

int worker_count() {
  const int available = omp_get_max_threads();
  if (const char* env = std::getenv("BALANCE_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) return std::min(cap, available);
  }
  return available;
}

}  // namespace balance
