#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace balance {

double psi(double r);

// -1 iff -psi(R) < sqrt(n) <z, v> <= 0.
int choose_sign(std::span<const double> z, std::span<const double> v, double R);

// Same rule given the projection eta = sqrt(n) <z, v> directly.
int sign_from_projection(double eta, double R);

double psi_identity_residual(double R, int quad_order = 32);

// <v, d> v + eps (d - <v, d> v)
std::vector<double> flip_orthogonal_step(std::span<const double> delta,
                                         std::span<const double> v, int eps);

struct CouplingRecord {
  int k = 0;
  std::vector<double> b;
  std::vector<double> v;
  double R = 0.0;
  int eps = 1;
  double proj = 0.0;  // sqrt(n) <dB, v>
  int flip_count = 0;  // flips so far, this step included
  std::vector<double> z;
  std::vector<double> dW;
  std::vector<double> dB;
};

// Read-only view of what an online strategy may see before step k: the
// increments Z(0..k-1) and the running sum Y(k).
class AdaptedHistory {
 public:
  AdaptedHistory(const std::vector<std::vector<double>>& z, const std::vector<double>& y,
                 int revealed, int n)
      : z_(z), y_(y), revealed_(revealed), n_(n) {}

  int revealed() const { return revealed_; }
  int n() const { return n_; }
  std::span<const double> increment(int l) const;
  std::span<const double> state() const { return y_; }

 private:
  const std::vector<std::vector<double>>& z_;
  const std::vector<double>& y_;
  int revealed_;
  int n_;
};

using DriftCallback = std::function<std::vector<double>(int k, const AdaptedHistory& history)>;

struct CouplingTrace {
  int n = 0;
  int m = 0;
  std::vector<CouplingRecord> steps;
  std::vector<std::vector<double>> y;  // Y(0..m)
};

// Builds Z, eps and W from Brownian increments dB (m x n, variance 1/n each).
CouplingTrace couple_paths(const std::vector<std::vector<double>>& brownian_increments,
                           const DriftCallback& drift_fn);

// One JSON object per step: {k, R, eps, proj, flip_count}.
void write_trace_jsonl(const CouplingTrace& trace, std::ostream& os);

DriftCallback constant_drift(std::vector<double> b);

struct ProbeResult {
  int n = 0;
  int reps = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
  double ci_half = 0.0;  // 1.96 standard errors
};

// Monte Carlo estimate of E|sum sigma(k) - (B(1) - B(0))|_inf over m = n steps.
ProbeResult coupling_error_probe(const DriftCallback& drift_fn, int n, int reps,
                                 std::uint64_t seed);

struct CouplingValidation {
  int n = 0;
  int m = 0;
  long reps = 0;
  std::vector<double> b;
  std::vector<double> mean;  // pooled E^[eps Z] per coordinate
  std::vector<double> se;
  double max_abs_z = 0.0;         // max_i |mean_i - b_i| / se_i
  double ks_min_pvalue = 1.0;     // min over coordinates, W increments vs N(0, 1/n)
  double reconstruction_residual = 0.0;  // max |Z - <v,dB>v - eps P dB|_inf and |dW - Z|_inf
  double norm_residual = 0.0;            // max ||Z|_2 - |dB|_2|
};

// Constant-drift coupling runs with Gaussian increments; pools all steps.
CouplingValidation validate_coupling(const std::vector<double>& b, int m, long reps,
                                     std::uint64_t seed);

struct NormConcentration {
  int n = 0;
  long draws = 0;
  double mean = 0.0;  // sample mean of (|U|_2 - sqrt(n))_+^2
  double stderr_ = 0.0;
  double bound = 4.0;  // 2 Var(U_1^2)
};

NormConcentration norm_concentration_test(int n, long draws, std::uint64_t seed);

}  // namespace balance
