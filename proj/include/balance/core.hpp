#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "balance/rng.hpp"

namespace balance {

// sqrt(2/pi): the largest conditional drift a sign choice can extract from a
// standard Gaussian projection.
inline constexpr double kC0 = 0.79788456080286535588;
inline constexpr double kPi = 3.14159265358979323846;

enum class DistKind { Gaussian, Rademacher, UniformSym, StudentT };

// Increment law, always normalized to mean 0 and variance 1.
struct IncrementDistribution {
  DistKind kind = DistKind::Gaussian;
  double dof = 0.0;  // StudentT only

  static IncrementDistribution gaussian() { return {DistKind::Gaussian, 0.0}; }
  static IncrementDistribution rademacher() { return {DistKind::Rademacher, 0.0}; }
  static IncrementDistribution uniform_sym() { return {DistKind::UniformSym, 0.0}; }
  static IncrementDistribution student_t(double dof);

  std::string name() const;
};

IncrementDistribution parse_distribution(const std::string& name, double dof = 5.0);

struct MomentReport {
  double mean;
  double var;
  double m4;
};

// Closed-form moments; throws RejectedDistribution for an infinite fourth moment
// and when the variance is not 1 to 1e-12.
MomentReport validate_distribution(const IncrementDistribution& dist);

// One unit-variance draw at sequence position `index` of the stream.
double draw_at(const IncrementDistribution& dist, const CounterKey& key, std::uint64_t index);
// Unit-variance draws for positions first .. first + out.size() - 1.
void fill_draws(const IncrementDistribution& dist, const CounterKey& key, std::uint64_t first,
                std::span<double> out);

struct StateVector {
  std::vector<double> y;  // already on the 1/sqrt(n) scale
  int k = 0;
  int n = 0;
  int m = 0;

  StateVector() = default;
  StateVector(int n_, int m_);
  double sup_norm() const;
};

class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t seed, std::uint64_t stream_id) : key_{seed, stream_id} {}

  std::uint64_t next_u64();
  double uniform();
  double normal();

  // Reserves `count` consecutive draw positions and returns the first.
  std::uint64_t reserve(std::uint64_t count);

  const CounterKey& key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  // Child stream that never overlaps the parent or its other children.
  RngStream split(std::uint64_t child) const;

  std::string serialize() const;
  static RngStream deserialize(const std::string& text);

  bool operator==(const RngStream&) const = default;

 private:
  CounterKey key_{};
  std::uint64_t counter_ = 0;
};

RngStream make_stream(std::uint64_t seed, std::uint64_t stream_id);

std::vector<double> sample_increment(const IncrementDistribution& dist, int n, RngStream& rng);
void sample_increment_into(const IncrementDistribution& dist, RngStream& rng,
                           std::span<double> out);

// Mixes two words into a stream id (used to derive per-replication streams).
std::uint64_t mix_stream(std::uint64_t a, std::uint64_t b);

}  // namespace balance
