#include "balance/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "balance/core.hpp"
#include "balance/errors.hpp"
#include "balance/normal.hpp"

namespace balance {

double psi(double r) {
  if (r < 0.0 || r > kC0 * (1.0 + 1e-12)) throw DomainError("psi needs 0 <= r <= c0");
  const double rc = std::min(r, kC0 * (1.0 - 1e-15));
  return std::sqrt(-2.0 * std::log1p(-rc / kC0));
}

int sign_from_projection(double eta, double R) {
  if (R <= 0.0) return 1;
  return (eta <= 0.0 && eta > -psi(R)) ? -1 : 1;
}

int choose_sign(std::span<const double> z, std::span<const double> v, double R) {
  double dot = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) dot += z[i] * v[i];
  return sign_from_projection(std::sqrt(double(z.size())) * dot, R);
}

double psi_identity_residual(double R, int quad_order) {
  if (!(R >= 0.0 && R < kC0)) throw DomainError("psi_identity_residual needs 0 <= R < c0");
  // E[eta] = 0 by symmetry; the flipped part is a smooth integral over (-psi, 0].
  const double p = psi(R);
  double flipped = 0.0;
  if (p > 0.0) {
    const QuadratureRule rule = gauss_legendre(quad_order, -p, 0.0);
    for (int i = 0; i < rule.order(); ++i)
      flipped += rule.weights[std::size_t(i)] * rule.nodes[std::size_t(i)] *
                 normal_pdf(rule.nodes[std::size_t(i)]);
  }
  return std::abs(-2.0 * flipped - R);
}

std::vector<double> flip_orthogonal_step(std::span<const double> delta,
                                         std::span<const double> v, int eps) {
  double dot = 0.0;
  for (std::size_t i = 0; i < delta.size(); ++i) dot += delta[i] * v[i];
  std::vector<double> out(delta.size());
  for (std::size_t i = 0; i < delta.size(); ++i)
    out[i] = eps > 0 ? delta[i] : dot * v[i] - (delta[i] - dot * v[i]);
  return out;
}

std::span<const double> AdaptedHistory::increment(int l) const {
  if (l < 0 || l >= revealed_)
    throw AdaptednessViolation("drift callback read increment " + std::to_string(l) +
                               " before it was revealed");
  return z_[std::size_t(l)];
}

namespace {

struct StepResult {
  double R;
  int eps;
  double proj;
};

// One coupling step; writes v and z, returns the scalars.
StepResult coupling_step(std::span<const double> b, std::span<const double> dB,
                         std::vector<double>& v, std::vector<double>& z) {
  const std::size_t n = dB.size();
  double norm2 = 0.0;
  for (double e : b) norm2 += e * e;
  const double norm = std::sqrt(norm2);
  const double sqrt_n = std::sqrt(double(n));
  if (norm * sqrt_n > kC0 * (1.0 + 1e-12))
    throw std::invalid_argument("coupling drift exceeds c0 / sqrt(n)");
  v.assign(n, 0.0);
  if (norm > 0.0) {
    for (std::size_t i = 0; i < n; ++i) v[i] = b[i] / norm;
  } else {
    v[0] = 1.0;
  }
  const double R = std::min(norm * sqrt_n, kC0);
  double dot = 0.0;
  for (std::size_t i = 0; i < n; ++i) dot += dB[i] * v[i];
  const double eta = sqrt_n * dot;
  const int eps = sign_from_projection(eta, R);
  z = flip_orthogonal_step(dB, v, eps);
  return {R, eps, eta};
}

}  // namespace

CouplingTrace couple_paths(const std::vector<std::vector<double>>& brownian_increments,
                           const DriftCallback& drift_fn) {
  CouplingTrace trace;
  trace.m = int(brownian_increments.size());
  if (trace.m == 0) return trace;
  trace.n = int(brownian_increments.front().size());
  const int n = trace.n;
  std::vector<std::vector<double>> revealed;
  revealed.reserve(std::size_t(trace.m));
  std::vector<double> y(static_cast<std::size_t>(n), 0.0);
  trace.y.push_back(y);
  int flips = 0;
  for (int k = 0; k < trace.m; ++k) {
    const auto& dB = brownian_increments[std::size_t(k)];
    if (int(dB.size()) != n) throw std::invalid_argument("ragged Brownian increments");
    const AdaptedHistory history(revealed, y, k, n);
    CouplingRecord rec;
    rec.k = k;
    rec.b = drift_fn(k, history);
    if (int(rec.b.size()) != n) throw std::invalid_argument("drift has the wrong dimension");
    const StepResult s = coupling_step(rec.b, dB, rec.v, rec.z);
    rec.R = s.R;
    rec.eps = s.eps;
    rec.proj = s.proj;
    flips += s.eps < 0 ? 1 : 0;
    rec.flip_count = flips;
    rec.dW = rec.z;
    rec.dB = dB;
    for (int i = 0; i < n; ++i) y[std::size_t(i)] += s.eps * rec.z[std::size_t(i)];
    revealed.push_back(rec.z);
    trace.y.push_back(y);
    trace.steps.push_back(std::move(rec));
  }
  return trace;
}

void write_trace_jsonl(const CouplingTrace& trace, std::ostream& os) {
  for (const auto& rec : trace.steps) {
    nlohmann::ordered_json j;
    j["k"] = rec.k;
    j["R"] = rec.R;
    j["eps"] = rec.eps;
    j["proj"] = rec.proj;
    j["flip_count"] = rec.flip_count;
    os << j.dump() << '\n';
  }
}

DriftCallback constant_drift(std::vector<double> b) {
  return [b = std::move(b)](int, const AdaptedHistory&) { return b; };
}

ProbeResult coupling_error_probe(const DriftCallback& drift_fn, int n, int reps,
                                 std::uint64_t seed) {
  if (n < 1 || reps < 2) throw std::invalid_argument("probe needs n >= 1 and reps >= 2");
  const int m = n;
  std::vector<double> errs(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    RngStream rng = make_stream(seed, std::uint64_t(r));
    std::vector<std::vector<double>> revealed;
    std::vector<double> y(static_cast<std::size_t>(n), 0.0), N(static_cast<std::size_t>(n), 0.0);
    std::vector<double> dB(static_cast<std::size_t>(n)), v, z;
    for (int k = 0; k < m; ++k) {
      sample_increment_into(IncrementDistribution::gaussian(), rng, dB);
      const AdaptedHistory history(revealed, y, k, n);
      const std::vector<double> b = drift_fn(k, history);
      const StepResult s = coupling_step(b, dB, v, z);
      for (int i = 0; i < n; ++i) {
        const std::size_t u = std::size_t(i);
        const double step = s.eps * z[u];
        y[u] += step;
        N[u] += step - b[u] - dB[u];
      }
      revealed.push_back(z);
    }
    double sup = 0.0;
    for (double e : N) sup = std::max(sup, std::abs(e));
    errs[std::size_t(r)] = sup;
  }
  double mean = 0.0;
  for (double e : errs) mean += e;
  mean /= reps;
  double var = 0.0;
  for (double e : errs) var += (e - mean) * (e - mean);
  var /= (reps - 1);
  ProbeResult out;
  out.n = n;
  out.reps = reps;
  out.mean = mean;
  out.stderr_ = std::sqrt(var / reps);
  out.ci_half = 1.96 * out.stderr_;
  return out;
}

CouplingValidation validate_coupling(const std::vector<double>& b, int m, long reps,
                                     std::uint64_t seed) {
  const int n = int(b.size());
  if (n < 1 || m < 1 || reps < 2) throw std::invalid_argument("validation needs n, m >= 1, reps >= 2");
  const auto un = std::size_t(n);
  const double scale = 1.0 / std::sqrt(double(n));
  const IncrementDistribution gauss = IncrementDistribution::gaussian();
  const DriftCallback drift = constant_drift(b);

  CouplingValidation out;
  out.n = n;
  out.m = m;
  out.reps = reps;
  out.b = b;
  std::vector<double> sum(un, 0.0), sum2(un, 0.0);
  std::vector<std::vector<double>> w(un);
  for (auto& col : w) col.reserve(std::size_t(reps) * std::size_t(m));
  std::vector<std::vector<double>> inc(static_cast<std::size_t>(m), std::vector<double>(un));

  for (long r = 0; r < reps; ++r) {
    const CounterKey key{seed, std::uint64_t(r)};
    for (int k = 0; k < m; ++k) {
      auto& row = inc[std::size_t(k)];
      fill_draws(gauss, key, std::uint64_t(k) * un, row);
      for (double& x : row) x *= scale;
    }
    const CouplingTrace trace = couple_paths(inc, drift);
    for (const auto& rec : trace.steps) {
      double vd = 0.0, zz = 0.0, bb = 0.0;
      for (std::size_t i = 0; i < un; ++i) {
        vd += rec.v[i] * rec.dB[i];
        zz += rec.z[i] * rec.z[i];
        bb += rec.dB[i] * rec.dB[i];
      }
      for (std::size_t i = 0; i < un; ++i) {
        const double recon = vd * rec.v[i] + rec.eps * (rec.dB[i] - vd * rec.v[i]);
        out.reconstruction_residual =
            std::max({out.reconstruction_residual, std::abs(rec.z[i] - recon),
                      std::abs(rec.dW[i] - rec.z[i])});
        const double x = rec.eps * rec.z[i];
        sum[i] += x;
        sum2[i] += x * x;
        w[i].push_back(rec.dW[i]);
      }
      out.norm_residual = std::max(out.norm_residual, std::abs(std::sqrt(zz) - std::sqrt(bb)));
    }
  }

  const double count = double(reps) * double(m);
  out.mean.resize(un);
  out.se.resize(un);
  for (std::size_t i = 0; i < un; ++i) {
    const double mu = sum[i] / count;
    const double var = std::max(0.0, (sum2[i] - count * mu * mu) / (count - 1.0));
    out.mean[i] = mu;
    out.se[i] = std::sqrt(var / count);
    if (out.se[i] > 0.0)
      out.max_abs_z = std::max(out.max_abs_z, std::abs(mu - b[i]) / out.se[i]);
    out.ks_min_pvalue = std::min(out.ks_min_pvalue, ks_normal_pvalue(std::move(w[i]), 1.0 / n));
  }
  return out;
}

NormConcentration norm_concentration_test(int n, long draws, std::uint64_t seed) {
  if (n < 1 || draws < 2) throw std::invalid_argument("norm test needs n >= 1 and draws >= 2");
  const IncrementDistribution gauss = IncrementDistribution::gaussian();
  const CounterKey key{seed, 0x6e6f726dULL};
  std::vector<double> u(static_cast<std::size_t>(n));
  const double root = std::sqrt(double(n));
  double sum = 0.0, sum2 = 0.0;
  for (long d = 0; d < draws; ++d) {
    fill_draws(gauss, key, std::uint64_t(d) * std::uint64_t(n), u);
    double sq = 0.0;
    for (double x : u) sq += x * x;
    const double e = std::max(0.0, std::sqrt(sq) - root);
    sum += e * e;
    sum2 += e * e * e * e;
  }
  NormConcentration out;
  out.n = n;
  out.draws = draws;
  out.mean = sum / double(draws);
  const double var = std::max(0.0, (sum2 - double(draws) * out.mean * out.mean) / double(draws - 1));
  out.stderr_ = std::sqrt(var / double(draws));
  return out;
}

}  // namespace balance
