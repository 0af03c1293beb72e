#include "balance/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "balance/errors.hpp"

namespace balance {

IncrementDistribution IncrementDistribution::student_t(double dof) {
  return {DistKind::StudentT, dof};
}

std::string IncrementDistribution::name() const {
  switch (kind) {
    case DistKind::Gaussian: return "gaussian";
    case DistKind::Rademacher: return "rademacher";
    case DistKind::UniformSym: return "uniform";
    case DistKind::StudentT: {
      std::ostringstream os;
      os << "student(" << dof << ")";
      return os.str();
    }
  }
  return "unknown";
}

IncrementDistribution parse_distribution(const std::string& name, double dof) {
  if (name == "gaussian" || name == "normal") return IncrementDistribution::gaussian();
  if (name == "rademacher" || name == "sign") return IncrementDistribution::rademacher();
  if (name == "uniform") return IncrementDistribution::uniform_sym();
  if (name == "student" || name == "student-t") {
    auto d = IncrementDistribution::student_t(dof);
    validate_distribution(d);
    return d;
  }
  throw std::invalid_argument("unknown distribution '" + name + "'");
}

MomentReport validate_distribution(const IncrementDistribution& dist) {
  MomentReport r{0.0, 1.0, 0.0};
  switch (dist.kind) {
    case DistKind::Gaussian: r.m4 = 3.0; break;
    case DistKind::Rademacher: r.m4 = 1.0; break;
    case DistKind::UniformSym: {
      // support [-a, a] with a^2 = 3
      const double a2 = 3.0;
      r.var = a2 / 3.0;
      r.m4 = a2 * a2 / 5.0;
      break;
    }
    case DistKind::StudentT: {
      const double v = dist.dof;
      if (!(v > 4.0)) throw RejectedDistribution("student-t needs dof > 4 for a finite fourth moment");
      const double scale2 = (v - 2.0) / v;
      r.var = scale2 * v / (v - 2.0);
      r.m4 = scale2 * scale2 * 3.0 * v * v / ((v - 2.0) * (v - 4.0));
      break;
    }
  }
  if (std::abs(r.var - 1.0) > 1e-12) throw RejectedDistribution("variance differs from 1");
  return r;
}

namespace {

// Marsaglia-Tsang gamma(shape, 1) for shape >= 1.
double gamma_draw(double shape, DrawBits& bits) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = ziggurat_normal(bits);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = bits.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace

double draw_at(const IncrementDistribution& dist, const CounterKey& key, std::uint64_t index) {
  switch (dist.kind) {
    case DistKind::Gaussian: return normal_at(key, index);
    case DistKind::Rademacher: return (word_at(key, index) >> 63) ? -1.0 : 1.0;
    case DistKind::UniformSym:
      return std::sqrt(3.0) * (2.0 * to_unit_open(word_at(key, index)) - 1.0);
    case DistKind::StudentT: {
      DrawBits bits(key, index);
      const double z = ziggurat_normal(bits);
      const double chi2 = 2.0 * gamma_draw(0.5 * dist.dof, bits);
      return z / std::sqrt(chi2 / dist.dof) * std::sqrt((dist.dof - 2.0) / dist.dof);
    }
  }
  return 0.0;
}

void fill_draws(const IncrementDistribution& dist, const CounterKey& key, std::uint64_t first,
                std::span<double> out) {
  if (dist.kind == DistKind::Gaussian) {
    fill_normals(key, first, out.size(), out.data());
    return;
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = draw_at(dist, key, first + i);
}

StateVector::StateVector(int n_, int m_) : y(std::size_t(n_), 0.0), k(0), n(n_), m(m_) {
  if (n_ < 1 || m_ < 1) throw std::invalid_argument("StateVector needs n >= 1 and m >= 1");
}

double StateVector::sup_norm() const {
  double s = 0.0;
  for (double v : y) s = std::max(s, std::abs(v));
  return s;
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t p = counter_++;
  return block_at(key_, p >> 1)[p & 1u];
}

double RngStream::uniform() { return to_unit_open(next_u64()); }

double RngStream::normal() { return normal_at(key_, counter_++); }

std::uint64_t RngStream::reserve(std::uint64_t count) {
  const std::uint64_t first = counter_;
  counter_ += count;
  return first;
}

std::uint64_t mix_stream(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined word
  std::uint64_t z = a * 0x9E3779B97F4A7C15ull + b + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

RngStream RngStream::split(std::uint64_t child) const {
  return RngStream(key_.seed, mix_stream(key_.stream, child + 1));
}

std::string RngStream::serialize() const {
  std::ostringstream os;
  os << key_.seed << ' ' << key_.stream << ' ' << counter_;
  return os.str();
}

RngStream RngStream::deserialize(const std::string& text) {
  std::istringstream is(text);
  RngStream s;
  is >> s.key_.seed >> s.key_.stream >> s.counter_;
  if (!is) throw std::invalid_argument("malformed RngStream state");
  return s;
}

RngStream make_stream(std::uint64_t seed, std::uint64_t stream_id) {
  return RngStream(seed, stream_id);
}

void sample_increment_into(const IncrementDistribution& dist, RngStream& rng,
                           std::span<double> out) {
  const double scale = 1.0 / std::sqrt(double(out.size()));
  const std::uint64_t first = rng.reserve(out.size());
  fill_draws(dist, rng.key(), first, out);
  for (double& v : out) v *= scale;
}

std::vector<double> sample_increment(const IncrementDistribution& dist, int n, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("sample_increment needs n >= 1");
  std::vector<double> out(static_cast<std::size_t>(n));
  sample_increment_into(dist, rng, out);
  return out;
}

}  // namespace balance
