#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "balance/core.hpp"
#include "balance/errors.hpp"
#include "balance/normal.hpp"
#include "balance/rng.hpp"

using namespace balance;

namespace {

std::vector<double> normals(RngStream& s, std::size_t count) {
  std::vector<double> out(count);
  for (auto& x : out) x = s.normal();
  return out;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = double(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("philox known-answer vectors") {
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("make_stream is deterministic") {
  RngStream a = make_stream(42, 0), b = make_stream(42, 0);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
  RngStream c = make_stream(42, 0), d = make_stream(42, 0);
  CHECK(normals(c, 5000) == normals(d, 5000));
}

TEST_CASE("distinct streams are uncorrelated") {
  RngStream a = make_stream(42, 0), b = make_stream(42, 1);
  const auto x = normals(a, 1000000), y = normals(b, 1000000);
  CHECK(std::abs(correlation(x, y)) <= 4.0 / std::sqrt(1e6));
}

TEST_CASE("distinct streams pass a two-sample KS test") {
  RngStream a = make_stream(9, 3), b = make_stream(9, 4);
  CHECK(ks_two_sample_pvalue(normals(a, 100000), normals(b, 100000)) >= 1e-3);
}

TEST_CASE("stream state round-trips through serialize") {
  RngStream s = make_stream(42, 0);
  for (int i = 0; i < 17; ++i) s.normal();
  RngStream resumed = RngStream::deserialize(s.serialize());
  CHECK(resumed == s);
  CHECK(normals(resumed, 100) == normals(s, 100));
  CHECK_THROWS_AS(RngStream::deserialize("garbage"), std::invalid_argument);
}

TEST_CASE("split children do not overlap the parent or each other") {
  const RngStream parent = make_stream(5, 11);
  std::set<std::uint64_t> first_words;
  RngStream p = parent;
  first_words.insert(p.next_u64());
  for (std::uint64_t c = 0; c < 64; ++c) {
    RngStream child = parent.split(c);
    CHECK(child.key().stream != parent.key().stream);
    first_words.insert(child.next_u64());
  }
  CHECK(first_words.size() == 65);
}

TEST_CASE("normals have unit variance and standard quantiles") {
  RngStream s = make_stream(1, 2);
  const auto x = normals(s, 1000000);
  double mean = 0, var = 0;
  for (double v : x) mean += v;
  mean /= double(x.size());
  for (double v : x) var += (v - mean) * (v - mean);
  var /= double(x.size() - 1);
  CHECK(var >= 0.99);
  CHECK(var <= 1.01);
  CHECK(ks_normal_pvalue(x, 1.0) >= 1e-3);
}

TEST_CASE("fill_normals matches single-position draws") {
  const CounterKey key{77, 5};
  for (std::uint64_t first : {0ull, 1ull, 6ull, 1001ull}) {
    std::vector<double> batch(37);
    fill_normals(key, first, batch.size(), batch.data());
    for (std::size_t i = 0; i < batch.size(); ++i) CHECK(batch[i] == normal_at(key, first + i));
  }
}

TEST_CASE("validate_distribution moments") {
  auto g = validate_distribution(IncrementDistribution::gaussian());
  CHECK(g.mean == 0.0);
  CHECK(g.var == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.m4 == doctest::Approx(3.0));
  auto r = validate_distribution(IncrementDistribution::rademacher());
  CHECK(r.var == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.m4 == doctest::Approx(1.0));
  auto u = validate_distribution(IncrementDistribution::uniform_sym());
  CHECK(u.var == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(u.m4 == doctest::Approx(1.8));
  auto t = validate_distribution(IncrementDistribution::student_t(5.0));
  CHECK(t.var == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(t.m4 == doctest::Approx(9.0));
  CHECK_THROWS_AS(validate_distribution(IncrementDistribution::student_t(4.0)), RejectedDistribution);
  CHECK_THROWS_AS(parse_distribution("student", 3.5), RejectedDistribution);
}

TEST_CASE("sample_increment scaling") {
  SUBCASE("gaussian n = 1 has unit sample variance") {
    RngStream s = make_stream(3, 0);
    double sum = 0, sum2 = 0;
    const int N = 1000000;
    for (int i = 0; i < N; ++i) {
      const double x = sample_increment(IncrementDistribution::gaussian(), 1, s)[0];
      sum += x;
      sum2 += x * x;
    }
    const double var = (sum2 - sum * sum / N) / (N - 1);
    CHECK(var >= 0.99);
    CHECK(var <= 1.01);
  }
  SUBCASE("rademacher n = 4 takes values +-1/2") {
    RngStream s = make_stream(3, 1);
    int plus = 0, total = 0;
    for (int i = 0; i < 10000; ++i)
      for (double x : sample_increment(IncrementDistribution::rademacher(), 4, s)) {
        REQUIRE(std::abs(std::abs(x) - 0.5) == 0.0);
        plus += x > 0;
        ++total;
      }
    CHECK(std::abs(plus / double(total) - 0.5) <= 3.0 / (2.0 * std::sqrt(double(total))));
  }
  SUBCASE("student-t dof = 5 fourth moment matches its kurtosis") {
    RngStream s = make_stream(3, 2);
    const int n = 16, N = 200000;
    std::vector<double> m4;
    m4.reserve(std::size_t(N) * n);
    for (int i = 0; i < N; ++i)
      for (double x : sample_increment(IncrementDistribution::student_t(5.0), n, s)) m4.push_back(std::pow(x * std::sqrt(double(n)), 4));
    double mean = 0;
    for (double v : m4) mean += v;
    mean /= double(m4.size());
    double var = 0;
    for (double v : m4) var += (v - mean) * (v - mean);
    const double se = std::sqrt(var / double(m4.size() - 1) / double(m4.size()));
    CHECK(std::isfinite(mean));
    CHECK(std::abs(mean - 9.0) <= 3.0 * se);
  }
}

TEST_CASE("empirical covariance of increments approaches identity / n") {
  for (auto dist : {IncrementDistribution::gaussian(), IncrementDistribution::rademacher(),
                    IncrementDistribution::uniform_sym(), IncrementDistribution::student_t(6.0)}) {
    CAPTURE(dist.name());
    const int n = 4, N = 200000;
    RngStream s = make_stream(8, 8);
    std::vector<double> cov(n * n, 0.0);
    for (int r = 0; r < N; ++r) {
      const auto z = sample_increment(dist, n, s);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) cov[std::size_t(i * n + j)] += z[std::size_t(i)] * z[std::size_t(j)];
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double c = cov[std::size_t(i * n + j)] / N * n;  // on the unit scale
        if (i == j) CHECK(std::abs(c - 1.0) <= 0.02);
        else CHECK(std::abs(c) <= 4.0 / std::sqrt(double(N)));
      }
  }
}

TEST_CASE("state vector invariants") {
  StateVector s(5, 7);
  CHECK(s.y.size() == 5);
  CHECK(s.k == 0);
  CHECK(s.sup_norm() == 0.0);
  s.y[3] = -2.5;
  CHECK(s.sup_norm() == 2.5);
}

TEST_CASE("normal special functions") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-13));
  CHECK(normal_quantile(normal_cdf(-7.5)) == doctest::Approx(-7.5).epsilon(1e-10));
  CHECK(normal_quantile_upper(1e-20) == doctest::Approx(9.262340089798408).epsilon(1e-10));
  CHECK(normal_sf(10.0) == doctest::Approx(7.619853024160527e-24).epsilon(1e-10));
  const auto gh = gauss_hermite_normal(20, 0.5);
  double w = 0, m2 = 0, m4 = 0;
  for (int i = 0; i < gh.order(); ++i) {
    w += gh.weights[std::size_t(i)];
    m2 += gh.weights[std::size_t(i)] * std::pow(gh.nodes[std::size_t(i)], 2);
    m4 += gh.weights[std::size_t(i)] * std::pow(gh.nodes[std::size_t(i)], 4);
  }
  CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m2 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(m4 == doctest::Approx(0.75).epsilon(1e-12));
}
