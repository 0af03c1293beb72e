#include <doctest.h>

#include <cmath>
#include <numeric>

#include "balance/export.hpp"
#include "balance/montecarlo.hpp"

using namespace balance;

namespace {

StrategyConfig cfg(const char* name, int n, int m, DriftSpec d = DriftSpec::stationary_tan()) {
  return parse_strategy(name, d, n, m);
}

}  // namespace

TEST_CASE("run_experiment rejects tiny runs") {
  CHECK_THROWS_AS(run_experiment(cfg("random", 4, 4), IncrementDistribution::gaussian(), 99, 1),
                  std::invalid_argument);
}

TEST_CASE("results are bit-identical across worker counts and the serial path") {
  for (const char* name : {"random", "greedy", "drift"}) {
    CAPTURE(name);
    const auto c = cfg(name, 24, 30);
    const auto law = IncrementDistribution::gaussian();
    const std::string ref = export_json(to_json(run_experiment_serial(c, law, 1000, 42, true)));
    for (int threads : {1, 4, 8, 16}) {
      const auto stats = run_experiment(c, law, 1000, 42, RunOptions{true, threads});
      CHECK(export_json(to_json(stats)) == ref);
    }
  }
}

TEST_CASE("batch-means bookkeeping") {
  const auto s = run_experiment(cfg("random", 16, 16), IncrementDistribution::gaussian(), 1000, 3);
  REQUIRE(s.batch_means.size() == std::size_t(kBatches));
  CHECK(s.reps == 1000);
  const double mean = std::accumulate(s.batch_means.begin(), s.batch_means.end(), 0.0) / kBatches;
  CHECK(s.mean == doctest::Approx(mean).epsilon(1e-13));
  double var = 0;
  for (double b : s.batch_means) var += (b - mean) * (b - mean);
  var /= kBatches - 1;
  CHECK(s.stderr_ == doctest::Approx(std::sqrt(var / kBatches)).epsilon(1e-12));
  const auto uneven = run_experiment(cfg("random", 16, 16), IncrementDistribution::gaussian(), 1017, 3);
  CHECK(uneven.reps == 1017);
  CHECK(uneven.batch_means.size() == std::size_t(kBatches));
}

TEST_CASE("random signs have zero mean increments") {
  const int n = 8, reps = 20000;
  const auto d = doob_diagnostics(cfg("random", n, 12), IncrementDistribution::gaussian(), reps, 5);
  REQUIRE(d.mean_increment.size() == std::size_t(2 * n));
  const double se = std::sqrt(1.0 / n / reps);
  for (double v : d.mean_increment) CHECK(std::abs(v) <= 4 * se);
  CHECK(d.admissible);
}

TEST_CASE("constant drift feedback realizes its drift") {
  const int n = 8, reps = 40000;
  const double a = 0.5;
  const auto d = doob_diagnostics(cfg("drift", n, 6, DriftSpec::constant(a)), IncrementDistribution::gaussian(), reps, 6);
  const double b = a / n, se = std::sqrt(1.0 / n / reps);
  for (double v : d.mean_increment) CHECK(std::abs(v - b) <= 4 * se);
  for (double r : d.feedback_drift_max) CHECK(r == doctest::Approx(a).epsilon(1e-12));
}

TEST_CASE("drift admissibility and variance bounds") {
  for (const char* name : {"random", "greedy", "drift"}) {
    for (auto law : {IncrementDistribution::gaussian(), IncrementDistribution::rademacher(),
                     IncrementDistribution::student_t(6.0)}) {
      CAPTURE(name);
      CAPTURE(law.name());
      const auto d = doob_diagnostics(cfg(name, 16, 16), law, 4000, 7);
      const double bound = law.kind == DistKind::Gaussian ? kC0 : 1.0;
      CHECK(d.drift_bound == bound);
      CHECK(d.admissible);
      for (std::size_t k = 0; k < d.drift_norm.size(); ++k) {
        CHECK(d.drift_norm[k] <= bound + 4 * d.drift_norm_se[k]);
        CHECK(d.sigma2[k] <= 1.0 + 4 * d.sigma2_se[k]);
      }
      if (std::string(name) == "drift") {
        for (double r : d.feedback_drift_max) CHECK(r <= kC0 * (1 + 1e-14));
      }
    }
  }
}

TEST_CASE("summarize") {
  CHECK(summarize({}).empty());
  CHECK(export_csv(summary_table(summarize({}))) == "strategy,n,m,mean,stderr\n");
  const auto a = run_experiment(cfg("greedy", 32, 32), IncrementDistribution::gaussian(), 2000, 1);
  const auto rows = summarize({a});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].mean == a.mean);
  CHECK(rows[0].stderr_ == a.stderr_);
  CHECK(rows[0].strategy == "greedy");
  const auto b = run_experiment(cfg("greedy", 32, 32), IncrementDistribution::gaussian(), 2000, 2);
  CHECK(a.mean != b.mean);
  CHECK(std::abs(a.mean - b.mean) <= 4 * std::hypot(a.stderr_, b.stderr_));
}

TEST_CASE("strategy ordering at n = 256") {
  const auto law = IncrementDistribution::gaussian();
  const auto r = run_experiment(cfg("random", 256, 256), law, 400, 8);
  const auto g = run_experiment(cfg("greedy", 256, 256), law, 400, 8);
  const auto d = run_experiment(cfg("drift", 256, 256), law, 400, 8);
  CHECK(r.mean >= g.mean - 3 * std::hypot(r.stderr_, g.stderr_));
  CHECK(g.mean >= d.mean - 3 * std::hypot(g.stderr_, d.stderr_));
}

TEST_CASE("non-Gaussian increments and m != n") {
  for (auto law : {IncrementDistribution::uniform_sym(), IncrementDistribution::rademacher()}) {
    const auto s = run_experiment(cfg("drift", 16, 40), law, 200, 9);
    CHECK(std::isfinite(s.mean));
    CHECK(s.mean > 0.0);
  }
}
