#include "balance/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <omp.h>

#include "balance/coupling.hpp"
#include "balance/parallel.hpp"

namespace balance {

namespace {

struct Accumulator {
  int n = 0, m = 0;
  std::vector<std::int64_t> sum;  // m x n, eps Z
  std::vector<std::int64_t> zz;   // |Z|^2 per step
  std::vector<std::int64_t> zz2;  // |Z|^4 per step
  std::vector<std::int64_t> fb_sigma2;
  std::vector<double> fb_max;

  Accumulator(int n_, int m_)
      : n(n_), m(m_), sum(std::size_t(n_) * std::size_t(m_), 0), zz(std::size_t(m_), 0),
        zz2(std::size_t(m_), 0), fb_sigma2(std::size_t(m_), 0), fb_max(std::size_t(m_), 0.0) {}

  void merge(const Accumulator& o) {
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += o.sum[i];
    for (std::size_t k = 0; k < zz.size(); ++k) {
      zz[k] += o.zz[k];
      zz2[k] += o.zz2[k];
      fb_sigma2[k] += o.fb_sigma2[k];
      fb_max[k] = std::max(fb_max[k], o.fb_max[k]);
    }
  }
};

struct Scratch {
  std::vector<double> y, z, a;
  explicit Scratch(int n)
      : y(static_cast<std::size_t>(n)), z(static_cast<std::size_t>(n)),
        a(static_cast<std::size_t>(n)) {}
};

double replicate(const StrategyConfig& cfg, const IncrementDistribution& dist, std::uint64_t seed,
                 std::uint64_t rep, Scratch& s, Accumulator* acc) {
  const int n = cfg.n, m = cfg.m;
  const std::size_t un = std::size_t(n);
  const double inv_sqrt_n = 1.0 / std::sqrt(double(n));
  const double sqrt_n = std::sqrt(double(n));
  const CounterKey inc_key{seed, 2 * rep};
  const CounterKey coin_key{seed, 2 * rep + 1};
  std::fill(s.y.begin(), s.y.end(), 0.0);
  for (int k = 0; k < m; ++k) {
    fill_draws(dist, inc_key, std::uint64_t(k) * un, s.z);
    for (double& v : s.z) v *= inv_sqrt_n;
    int sign = 1;
    double R = 0.0, b_scale = 0.0;
    switch (cfg.kind) {
      case StrategyKind::RandomSign:
        sign = (word_at(coin_key, std::uint64_t(k)) >> 63) ? -1 : 1;
        break;
      case StrategyKind::GreedySup: {
        double plus = 0.0, minus = 0.0;
        for (std::size_t i = 0; i < un; ++i) {
          plus = std::max(plus, std::abs(s.y[i] + s.z[i]));
          minus = std::max(minus, std::abs(s.y[i] - s.z[i]));
        }
        sign = minus < plus ? -1 : 1;
        break;
      }
      case StrategyKind::DriftFeedback: {
        const double t = double(k) / n;
        double norm2 = 0.0, dot = 0.0;
        for (std::size_t i = 0; i < un; ++i) {
          const double ai = eval_drift(cfg.drift, t, s.y[i]) / n;
          s.a[i] = ai;
          norm2 += ai * ai;
          dot += ai * s.z[i];
        }
        if (norm2 > 0.0) {
          const double norm = std::sqrt(norm2);
          R = std::min(sqrt_n * norm, kC0);
          b_scale = std::min(1.0, kC0 / (sqrt_n * norm));
          sign = sign_from_projection(sqrt_n * dot / norm, R);
        }
        break;
      }
    }
    for (std::size_t i = 0; i < un; ++i) s.y[i] += sign * s.z[i];
    if (acc) {
      std::int64_t* row = acc->sum.data() + std::size_t(k) * un;
      double z2 = 0.0, sig2 = 0.0;
      for (std::size_t i = 0; i < un; ++i) {
        const double inc = sign * s.z[i];
        row[i] += to_fixed(inc);
        z2 += inc * inc;
      }
      acc->zz[std::size_t(k)] += to_fixed(z2);
      acc->zz2[std::size_t(k)] += to_fixed(z2 * z2);
      if (cfg.kind == StrategyKind::DriftFeedback) {
        for (std::size_t i = 0; i < un; ++i) {
          const double d = sign * s.z[i] - b_scale * s.a[i];
          sig2 += d * d;
        }
        acc->fb_sigma2[std::size_t(k)] += to_fixed(sig2);
        acc->fb_max[std::size_t(k)] = std::max(acc->fb_max[std::size_t(k)], R);
      }
    }
  }
  double sup = 0.0;
  for (double v : s.y) sup = std::max(sup, std::abs(v));
  return sup;
}

void check_inputs(const StrategyConfig& cfg, long reps) {
  if (reps < 100) throw std::invalid_argument("run_experiment needs reps >= 100");
  if (cfg.n < 1 || cfg.m < 1) throw std::invalid_argument("run_experiment needs n, m >= 1");
}

RunStats finish(const StrategyConfig& cfg, const IncrementDistribution& dist, long reps,
                std::uint64_t seed, const std::vector<double>& per_rep, const Accumulator* acc) {
  RunStats st;
  st.strategy = cfg.name();
  st.dist = dist.name();
  st.n = cfg.n;
  st.m = cfg.m;
  st.reps = reps;
  st.seed = seed;
  double total = 0.0;
  for (double v : per_rep) total += v;
  st.mean = total / double(reps);
  st.batch_means.resize(kBatches);
  for (int b = 0; b < kBatches; ++b) {
    const long lo = reps * b / kBatches, hi = reps * (b + 1) / kBatches;
    double s = 0.0;
    for (long r = lo; r < hi; ++r) s += per_rep[std::size_t(r)];
    st.batch_means[std::size_t(b)] = s / double(hi - lo);
  }
  double bm = 0.0;
  for (double v : st.batch_means) bm += v;
  bm /= kBatches;
  double var = 0.0;
  for (double v : st.batch_means) var += (v - bm) * (v - bm);
  var /= (kBatches - 1);
  st.stderr_ = std::sqrt(var / kBatches);

  if (acc) {
    const int n = cfg.n, m = cfg.m;
    const double R = double(reps), sqrt_n = std::sqrt(double(n));
    StepDiagnostics d;
    d.drift_bound = dist.kind == DistKind::Gaussian ? kC0 : 1.0;
    for (int k = 0; k < m; ++k) {
      double mean2 = 0.0;
      const std::int64_t* row = acc->sum.data() + std::size_t(k) * std::size_t(n);
      for (int i = 0; i < n; ++i) {
        const double mu = from_fixed(row[i]) / R;
        mean2 += mu * mu;
      }
      const double ez2 = from_fixed(acc->zz[std::size_t(k)]) / R;
      const double ez4 = from_fixed(acc->zz2[std::size_t(k)]) / R;
      const double trace = std::max(ez2 - mean2, 0.0);
      const double stat = sqrt_n * std::sqrt(mean2);
      const double se = sqrt_n * std::sqrt(trace / R);
      d.drift_norm.push_back(stat);
      d.drift_norm_se.push_back(se);
      d.sigma2.push_back(trace);
      d.sigma2_se.push_back(std::sqrt(std::max(ez4 - ez2 * ez2, 0.0) / R));
      if (cfg.kind == StrategyKind::DriftFeedback) {
        d.feedback_drift_max.push_back(acc->fb_max[std::size_t(k)]);
        d.feedback_sigma2.push_back(from_fixed(acc->fb_sigma2[std::size_t(k)]) / R);
      }
      if (stat > d.drift_bound + 4.0 * se) d.admissible = false;
    }
    for (int k : {0, m - 1}) {
      const std::int64_t* row = acc->sum.data() + std::size_t(k) * std::size_t(n);
      for (int i = 0; i < n; ++i) d.mean_increment.push_back(from_fixed(row[i]) / R);
    }
    st.diagnostics = std::move(d);
  }
  return st;
}

}  // namespace

double simulate_replication(const StrategyConfig& strategy, const IncrementDistribution& dist,
                            std::uint64_t seed, std::uint64_t rep) {
  Scratch s(strategy.n);
  return replicate(strategy, dist, seed, rep, s, nullptr);
}

RunStats run_experiment(const StrategyConfig& strategy, const IncrementDistribution& dist,
                        long reps, std::uint64_t seed, const RunOptions& options) {
  check_inputs(strategy, reps);
  const int threads = options.threads > 0 ? options.threads : worker_count();
  std::vector<double> per_rep(static_cast<std::size_t>(reps));
  std::vector<Accumulator> accs;
  if (options.diagnostics) accs.assign(std::size_t(threads), Accumulator(0, 0));
#pragma omp parallel num_threads(threads)
  {
    Scratch s(strategy.n);
    Accumulator* acc = nullptr;
    if (options.diagnostics) {
      acc = &accs[std::size_t(omp_get_thread_num())];
      *acc = Accumulator(strategy.n, strategy.m);
    }
#pragma omp for schedule(dynamic, 4)
    for (long r = 0; r < reps; ++r)
      per_rep[std::size_t(r)] = replicate(strategy, dist, seed, std::uint64_t(r), s, acc);
  }
  if (!options.diagnostics) return finish(strategy, dist, reps, seed, per_rep, nullptr);
  for (std::size_t t = 1; t < accs.size(); ++t) accs[0].merge(accs[t]);
  return finish(strategy, dist, reps, seed, per_rep, &accs[0]);
}

RunStats run_experiment_serial(const StrategyConfig& strategy, const IncrementDistribution& dist,
                               long reps, std::uint64_t seed, bool diagnostics) {
  check_inputs(strategy, reps);
  std::vector<double> per_rep(static_cast<std::size_t>(reps));
  Scratch s(strategy.n);
  std::optional<Accumulator> acc;
  if (diagnostics) acc.emplace(strategy.n, strategy.m);
  for (long r = 0; r < reps; ++r)
    per_rep[std::size_t(r)] =
        replicate(strategy, dist, seed, std::uint64_t(r), s, acc ? &*acc : nullptr);
  return finish(strategy, dist, reps, seed, per_rep, acc ? &*acc : nullptr);
}

StepDiagnostics doob_diagnostics(const StrategyConfig& strategy, const IncrementDistribution& dist,
                                 long reps, std::uint64_t seed) {
  RunOptions opt;
  opt.diagnostics = true;
  return *run_experiment(strategy, dist, reps, seed, opt).diagnostics;
}

std::vector<SummaryRow> summarize(const std::vector<RunStats>& runs) {
  std::vector<SummaryRow> rows;
  rows.reserve(runs.size());
  for (const auto& r : runs) rows.push_back({r.strategy, r.n, r.m, r.mean, r.stderr_});
  return rows;
}

}  // namespace balance
