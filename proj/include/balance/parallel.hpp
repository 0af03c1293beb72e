#pragma once

#include <cstddef>
#include <cstdint>

namespace balance {

// OpenMP default thread count, capped by BALANCE_THREADS when set.
int worker_count();

// Fixed-point accumulation gives sums that do not depend on the order in which
// workers merge their partials.
inline constexpr double kFixedScale = 68719476736.0;  // 2^36

inline std::int64_t to_fixed(double v) {
  return std::int64_t(v * kFixedScale + (v >= 0.0 ? 0.5 : -0.5));
}
inline double from_fixed(std::int64_t v) { return double(v) / kFixedScale; }

}  // namespace balance
