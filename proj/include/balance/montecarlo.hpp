#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "balance/core.hpp"
#include "balance/strategies.hpp"

namespace balance {

struct RunOptions {
  bool diagnostics = false;
  int threads = 0;  // 0: worker_count()
};

// Unconditional per-step statistics of the increments eps(k) Z(k).
struct StepDiagnostics {
  std::vector<double> drift_norm;     // sqrt(n) |E^[eps Z]|_2
  std::vector<double> drift_norm_se;  // sampling scale of drift_norm
  std::vector<double> sigma2;         // sum_i (E^[(eps Z_i)^2] - E^[eps Z_i]^2)
  std::vector<double> sigma2_se;
  std::vector<double> feedback_drift_max;  // max over reps of sqrt(n) |b(k)|_2 (feedback only)
  std::vector<double> feedback_sigma2;     // E^|eps Z - b|^2 (feedback only)
  std::vector<double> mean_increment;      // E^[eps Z] of the first and last step, flattened
  double drift_bound = kC0;
  bool admissible = true;
};

struct RunStats {
  std::string strategy;
  std::string dist;
  int n = 0;
  int m = 0;
  long reps = 0;
  std::uint64_t seed = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
  std::vector<double> batch_means;
  std::optional<StepDiagnostics> diagnostics;
};

inline constexpr int kBatches = 50;

// OpenMP over replications; bit-identical for any worker count.
RunStats run_experiment(const StrategyConfig& strategy, const IncrementDistribution& dist,
                        long reps, std::uint64_t seed, const RunOptions& options = {});

// Single-threaded reference with the same replication kernel.
RunStats run_experiment_serial(const StrategyConfig& strategy, const IncrementDistribution& dist,
                               long reps, std::uint64_t seed, bool diagnostics = false);

StepDiagnostics doob_diagnostics(const StrategyConfig& strategy, const IncrementDistribution& dist,
                                 long reps, std::uint64_t seed);

// |Y(m)|_inf of one replication.
double simulate_replication(const StrategyConfig& strategy, const IncrementDistribution& dist,
                            std::uint64_t seed, std::uint64_t rep);

struct SummaryRow {
  std::string strategy;
  int n = 0;
  int m = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
};

std::vector<SummaryRow> summarize(const std::vector<RunStats>& runs);

}  // namespace balance
