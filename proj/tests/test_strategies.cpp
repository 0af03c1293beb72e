#include <doctest.h>

#include <cmath>
#include <vector>

#include "balance/dp_oracle.hpp"
#include "balance/errors.hpp"
#include "balance/montecarlo.hpp"
#include "balance/strategies.hpp"

using namespace balance;

namespace {

double Phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// d/dx log P(|x + sqrt(1-t) N| <= r) by a central difference of the mass.
double follmer_fd(double r, double t, double x) {
  const double s = std::sqrt(1.0 - t), h = 1e-5;
  auto logmass = [&](double y) { return std::log(Phi((r - y) / s) - Phi((-r - y) / s)); };
  return (logmass(x + h) - logmass(x - h)) / (2 * h);
}

StateVector state_from(std::vector<double> y, int k, int m) {
  StateVector s(int(y.size()), m);
  s.y = std::move(y);
  s.k = k;
  return s;
}

}  // namespace

TEST_CASE("project_to_ball") {
  CHECK(project_to_ball(std::vector<double>{0, 0, 0}, 1.0) == std::vector<double>{0, 0, 0});
  const auto p = project_to_ball(std::vector<double>{3, 4}, 1.0);
  CHECK(p[0] == doctest::Approx(0.6));
  CHECK(p[1] == doctest::Approx(0.8));
  const std::vector<double> inner{0.1, -0.2};
  CHECK(project_to_ball(inner, 1.0) == inner);
  CHECK_THROWS_AS(project_to_ball(inner, 0.0), std::invalid_argument);
}

TEST_CASE("greedy_sup_step") {
  CHECK(greedy_sup_step(state_from({0.0, 0.0}, 0, 2), std::vector<double>{0.3, -1.0}) == 1);
  CHECK(greedy_sup_step(state_from({1.0, 0.0}, 0, 2), std::vector<double>{0.3, 0.0}) == -1);
}

TEST_CASE("random_sign_step is a fair, reproducible coin") {
  const StateVector s = state_from({0.5}, 0, 1);
  const std::vector<double> z{1.0};
  RngStream a = make_stream(4, 0), b = make_stream(4, 0);
  const int N = 100000;
  int plus = 0;
  for (int i = 0; i < N; ++i) {
    const int e = random_sign_step(s, z, a);
    REQUIRE(e == random_sign_step(s, z, b));
    plus += e > 0;
  }
  CHECK(std::abs(plus / double(N) - 0.5) <= 3.0 / (2.0 * std::sqrt(double(N))));
}

TEST_CASE("greedy matches the DP-optimal sign at the last step") {
  RngStream rng = make_stream(21, 0);
  SUBCASE("n = 1") {
    const DpN1 dp(3);
    for (int i = 0; i < 500; ++i) {
      const double x = 3.0 * (rng.uniform() - 0.5), z = rng.normal();
      CHECK(greedy_sup_step(state_from({x}, 2, 3), std::vector<double>{z}) == dp.optimal_sign(2, x, z));
    }
  }
  SUBCASE("n = 2") {
    const DpN2 dp(16);
    for (int i = 0; i < 500; ++i) {
      const std::array<double, 2> y{2.0 * (rng.uniform() - 0.5), 2.0 * (rng.uniform() - 0.5)};
      const std::array<double, 2> z{rng.normal() / std::sqrt(2.0), rng.normal() / std::sqrt(2.0)};
      CHECK(greedy_sup_step(state_from({y[0], y[1]}, 1, 2), std::vector<double>{z[0], z[1]}) ==
            dp.optimal_sign(1, y, z));
    }
  }
}

TEST_CASE("stationary tan drift") {
  const DriftSpec tan = DriftSpec::stationary_tan();
  CHECK(eval_drift(tan, 0.3, 0.0) == 0.0);
  const double a = stationary_half_width();
  CHECK(a == doctest::Approx(std::pow(kPi / 2.0, 1.5)).epsilon(1e-15));
  for (double x = -3.0; x <= 3.0; x += 0.01) {
    const double v = eval_drift(tan, 0.0, x);
    CHECK(std::isfinite(v));
    CHECK(v * x <= 0.0);
    CHECK(std::abs(v + eval_drift(tan, 0.0, -x)) < 1e-12);
  }
  CHECK(eval_drift(tan, 0.0, a + 0.1) == 0.0);

  // int alpha^2 dm = c0^2 against the density (2 c0 / pi) cos^2(c0 x).
  const DriftSpec fine = DriftSpec::stationary_tan(1e-12);
  const int N = 200000;
  const double edge = a * (1 - 1e-10);  // the integrand jumps to 0 at +-a
  const double h = 2 * edge / N;
  double s = 0.0;
  for (int i = 0; i <= N; ++i) {
    const double x = -edge + i * h;
    const double w = (i == 0 || i == N) ? 1 : (i % 2 ? 4 : 2);
    const double al = eval_drift(fine, 0.0, x);
    s += w * al * al * (2 * kC0 / kPi) * std::pow(std::cos(kC0 * x), 2);
  }
  CHECK(std::abs(s * h / 3 - kC0 * kC0) < 1e-8);
}

TEST_CASE("Follmer interval drift") {
  const DriftSpec f = DriftSpec::follmer_interval(1.0);
  CHECK(eval_drift(f, 0.0, 0.0) == 0.0);
  for (double t : {0.0, 0.5, 0.9, 0.999}) {
    for (double x = -6.0; x <= 6.0; x += 0.05) {
      const double v = eval_drift(f, t, x);
      REQUIRE(std::isfinite(v));
      CHECK(std::abs(v + eval_drift(f, t, -x)) < 1e-12);
    }
  }
  CHECK(std::isfinite(eval_drift(f, 0.99, 40.0)));
  CHECK(eval_drift(f, 0.5, 0.7) == doctest::Approx(follmer_fd(1.0, 0.5, 0.7)).epsilon(1e-7));
  CHECK(eval_drift(f, 0.2, -1.3) == doctest::Approx(follmer_fd(1.0, 0.2, -1.3)).epsilon(1e-7));
  CHECK_THROWS_AS(eval_drift(f, 1.0, 0.0), DomainError);
}

TEST_CASE("drift_feedback_step") {
  const std::vector<double> z{0.1, -0.4, 0.2};
  SUBCASE("zero drift gives b = 0 and sign +1") {
    const auto step = drift_feedback_step(state_from({0.3, -0.2, 1.0}, 0, 3), z, DriftSpec::constant(0.0));
    CHECK(step.sign == 1);
    for (double v : step.b) CHECK(v == 0.0);
  }
  SUBCASE("huge states give a finite projected drift") {
    const auto step = drift_feedback_step(state_from({1e6, -1e6, 1.9}, 1, 3), z, DriftSpec::stationary_tan());
    double norm = 0;
    for (double v : step.b) {
      CHECK(std::isfinite(v));
      norm += v * v;
    }
    CHECK(std::sqrt(norm) <= kC0 / std::sqrt(3.0) * (1 + 1e-15));
  }
  SUBCASE("past the horizon throws") {
    CHECK_THROWS_AS(drift_feedback_step(state_from({0, 0, 0}, 3, 3), z, DriftSpec::stationary_tan()),
                    std::invalid_argument);
  }
}

TEST_CASE("feedback drift norm never exceeds c0 / sqrt(n)") {
  RngStream rng = make_stream(13, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + int(rng.uniform() * 40);
    std::vector<double> y(static_cast<std::size_t>(n));
    for (auto& v : y) v = 4.0 * rng.normal();
    for (const DriftSpec& d : {DriftSpec::stationary_tan(), DriftSpec::follmer_interval(0.5), DriftSpec::constant(3.0)}) {
      const auto b = feedback_drift(state_from(y, n / 2, n), d);
      double norm = 0;
      for (double v : b) norm += v * v;
      CHECK(std::sqrt(double(n)) * std::sqrt(norm) <= kC0 * (1 + 1e-14));
    }
  }
}

TEST_CASE("realized conditional drift equals b") {
  const int n = 8;
  const StateVector s = state_from({0.9, -1.2, 0.1, 0.0, 1.5, -0.3, 0.7, -1.8}, 2, n);
  const DriftSpec drift = DriftSpec::stationary_tan();
  const auto b = feedback_drift(s, drift);
  RngStream rng = make_stream(99, 0);
  const int N = 100000;
  std::vector<double> sum(n, 0.0), sum2(n, 0.0);
  for (int r = 0; r < N; ++r) {
    const auto z = sample_increment(IncrementDistribution::gaussian(), n, rng);
    const auto step = drift_feedback_step(s, z, drift);
    for (int i = 0; i < n; ++i) {
      const double x = step.sign * z[std::size_t(i)];
      sum[std::size_t(i)] += x;
      sum2[std::size_t(i)] += x * x;
    }
  }
  for (int i = 0; i < n; ++i) {
    const double mean = sum[std::size_t(i)] / N;
    const double se = std::sqrt((sum2[std::size_t(i)] / N - mean * mean) / N);
    CHECK(std::abs(mean - b[std::size_t(i)]) <= 4 * se);
  }
}

TEST_CASE("parse helpers") {
  CHECK(parse_strategy("greedy", DriftSpec::stationary_tan(), 4, 4).kind == StrategyKind::GreedySup);
  CHECK(parse_drift("follmer", 2.0).param == 2.0);
  CHECK_THROWS_AS(parse_strategy("best", DriftSpec::stationary_tan(), 4, 4), std::invalid_argument);
  CHECK_THROWS_AS(parse_strategy("random", DriftSpec::stationary_tan(), 0, 4), std::invalid_argument);
  CHECK_THROWS_AS(parse_drift("quadratic", 0.0), std::invalid_argument);
}

TEST_CASE("replications are finite and reproducible") {
  for (const char* name : {"random", "greedy", "drift"}) {
    const auto cfg = parse_strategy(name, DriftSpec::stationary_tan(), 32, 48);
    for (std::uint64_t rep = 0; rep < 5; ++rep) {
      const double a = simulate_replication(cfg, IncrementDistribution::gaussian(), 5, rep);
      CHECK(std::isfinite(a));
      CHECK(a == simulate_replication(cfg, IncrementDistribution::gaussian(), 5, rep));
    }
  }
}
