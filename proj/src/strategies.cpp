#include "balance/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "balance/coupling.hpp"
#include "balance/errors.hpp"
#include "balance/normal.hpp"

namespace balance {

DriftSpec DriftSpec::stationary_tan(double clip_margin) {
  if (!(clip_margin > 0.0 && clip_margin < 1.0))
    throw std::invalid_argument("clip margin must lie in (0, 1)");
  return {DriftKind::StationaryTan, clip_margin, nullptr};
}

DriftSpec DriftSpec::follmer_interval(double r) {
  if (!(r > 0.0)) throw std::invalid_argument("interval half-width must be positive");
  return {DriftKind::FollmerInterval, r, nullptr};
}

DriftSpec DriftSpec::constant(double a) { return {DriftKind::Constant, a, nullptr}; }

DriftSpec DriftSpec::tabulated(GridFunction g) {
  return {DriftKind::Tabulated, 0.0, std::make_shared<const GridFunction>(std::move(g))};
}

std::string DriftSpec::name() const {
  switch (kind) {
    case DriftKind::StationaryTan: return "tan";
    case DriftKind::FollmerInterval: return "follmer";
    case DriftKind::Constant: return "const";
    case DriftKind::Tabulated: return "table";
  }
  return "unknown";
}

double stationary_half_width() { return kPi / (2.0 * kC0); }

namespace {

double tan_drift(double x, double margin) {
  const double a = stationary_half_width();
  const double ax = std::abs(x);
  if (ax >= a) return 0.0;
  const double xc = std::min(ax, a * (1.0 - margin));
  const double v = -kC0 * std::tan(kC0 * xc);
  return x < 0.0 ? -v : v;
}

double log_cdf(double x) { return x > 0.0 ? std::log1p(-normal_sf(x)) : log_normal_cdf(x); }

// d/dx log[Phi((r - x)/s) - Phi((-r - x)/s)] for x >= 0.
double follmer_nonneg(double r, double s, double x) {
  const double a = (r - x) / s;
  const double b = (-r - x) / s;
  const double la = log_cdf(a), lb = log_cdf(b);
  const double log_mass = la + std::log1p(-std::exp(lb - la));
  const double lpa = -0.5 * a * a, lpb = -0.5 * b * b;
  constexpr double kLogSqrt2Pi = 0.91893853320467274178;
  return (std::exp(lpb - kLogSqrt2Pi - log_mass) - std::exp(lpa - kLogSqrt2Pi - log_mass)) / s;
}

}  // namespace

double eval_drift(const DriftSpec& drift, double t, double x) {
  switch (drift.kind) {
    case DriftKind::StationaryTan: return tan_drift(x, drift.param);
    case DriftKind::FollmerInterval: {
      if (!(t < 1.0 - 1e-9)) throw DomainError("Follmer drift needs t < 1 - 1e-9");
      const double s = std::sqrt(1.0 - t);
      return x >= 0.0 ? follmer_nonneg(drift.param, s, x) : -follmer_nonneg(drift.param, s, -x);
    }
    case DriftKind::Constant: return drift.param;
    case DriftKind::Tabulated: return drift.table->interpolate(t, x);
  }
  return 0.0;
}

std::string StrategyConfig::name() const {
  switch (kind) {
    case StrategyKind::RandomSign: return "random";
    case StrategyKind::GreedySup: return "greedy";
    case StrategyKind::DriftFeedback: return "drift:" + drift.name();
  }
  return "unknown";
}

DriftSpec parse_drift(const std::string& name, double param) {
  if (name == "tan") return DriftSpec::stationary_tan(param > 0.0 ? param : 1e-6);
  if (name == "follmer") return DriftSpec::follmer_interval(param > 0.0 ? param : 1.0);
  if (name == "const") return DriftSpec::constant(param);
  throw std::invalid_argument("unknown drift '" + name + "'");
}

StrategyConfig parse_strategy(const std::string& strategy, const DriftSpec& drift, int n, int m) {
  if (n < 1 || m < 1) throw std::invalid_argument("strategy needs n >= 1 and m >= 1");
  StrategyConfig cfg;
  cfg.n = n;
  cfg.m = m;
  cfg.drift = drift;
  if (strategy == "random") cfg.kind = StrategyKind::RandomSign;
  else if (strategy == "greedy") cfg.kind = StrategyKind::GreedySup;
  else if (strategy == "drift") cfg.kind = StrategyKind::DriftFeedback;
  else throw std::invalid_argument("unknown strategy '" + strategy + "'");
  return cfg;
}

int random_sign_step(const StateVector&, std::span<const double>, RngStream& rng) {
  return (rng.next_u64() >> 63) ? -1 : 1;
}

int greedy_sup_step(const StateVector& state, std::span<const double> z) {
  double plus = 0.0, minus = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    plus = std::max(plus, std::abs(state.y[i] + z[i]));
    minus = std::max(minus, std::abs(state.y[i] - z[i]));
  }
  return minus < plus ? -1 : 1;
}

std::vector<double> project_to_ball(std::span<const double> a, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("projection radius must be positive");
  double norm2 = 0.0;
  for (double v : a) norm2 += v * v;
  std::vector<double> out(a.begin(), a.end());
  const double norm = std::sqrt(norm2);
  if (norm > radius) {
    const double s = radius / norm;
    for (double& v : out) v *= s;
  }
  return out;
}

std::vector<double> feedback_drift(const StateVector& state, const DriftSpec& drift) {
  const int n = state.n;
  const double t = double(state.k) / n;
  std::vector<double> a(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) a[std::size_t(i)] = eval_drift(drift, t, state.y[std::size_t(i)]) / n;
  return project_to_ball(a, kC0 / std::sqrt(double(n)));
}

DriftCallback feedback_callback(const DriftSpec& drift, int m) {
  return [drift, m](int k, const AdaptedHistory& history) {
    StateVector state(history.n(), m);
    state.k = k;
    const auto y = history.state();
    state.y.assign(y.begin(), y.end());
    return feedback_drift(state, drift);
  };
}

FeedbackStep drift_feedback_step(const StateVector& state, std::span<const double> z,
                                 const DriftSpec& drift) {
  if (state.k >= state.m) throw std::invalid_argument("drift_feedback_step past the horizon");
  FeedbackStep out;
  out.b = feedback_drift(state, drift);
  double norm2 = 0.0;
  for (double v : out.b) norm2 += v * v;
  const double norm = std::sqrt(norm2);
  if (norm == 0.0) return out;
  std::vector<double> v(out.b);
  for (double& e : v) e /= norm;
  const double R = std::min(std::sqrt(double(state.n)) * norm, kC0);
  out.sign = choose_sign(z, v, R);
  return out;
}

}  // namespace balance
