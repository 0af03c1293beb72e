#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "balance/core.hpp"
#include "balance/coupling.hpp"
#include "balance/grid.hpp"

namespace balance {

enum class DriftKind { StationaryTan, FollmerInterval, Constant, Tabulated };

// Feedback drift alpha(t, x) applied coordinatewise.
struct DriftSpec {
  DriftKind kind = DriftKind::StationaryTan;
  double param = 1e-6;  // clip margin, interval half-width, or constant value
  std::shared_ptr<const GridFunction> table;

  static DriftSpec stationary_tan(double clip_margin = 1e-6);
  static DriftSpec follmer_interval(double r);
  static DriftSpec constant(double a);
  static DriftSpec tabulated(GridFunction g);

  std::string name() const;
};

// Half-width pi/(2 c0) of the support of the stationary law.
double stationary_half_width();

double eval_drift(const DriftSpec& drift, double t, double x);

enum class StrategyKind { RandomSign, GreedySup, DriftFeedback };

struct StrategyConfig {
  StrategyKind kind = StrategyKind::RandomSign;
  DriftSpec drift{};
  int n = 1;
  int m = 1;

  std::string name() const;
};

StrategyConfig parse_strategy(const std::string& strategy, const DriftSpec& drift, int n, int m);
DriftSpec parse_drift(const std::string& name, double param);

int random_sign_step(const StateVector& state, std::span<const double> z, RngStream& rng);

// argmin over eps of |y + eps z|_inf, ties to +1.
int greedy_sup_step(const StateVector& state, std::span<const double> z);

std::vector<double> project_to_ball(std::span<const double> a, double radius);

struct FeedbackStep {
  int sign = 1;
  std::vector<double> b;
};

// Projected drift vector for the current state (time t = k / n).
std::vector<double> feedback_drift(const StateVector& state, const DriftSpec& drift);

// Adapted callback for couple_paths that feeds back the projected drift of
// the running sum.
DriftCallback feedback_callback(const DriftSpec& drift, int m);

FeedbackStep drift_feedback_step(const StateVector& state, std::span<const double> z,
                                 const DriftSpec& drift);

}  // namespace balance
