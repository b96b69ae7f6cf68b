#pragma once

// Monte Carlo ground truth: Haar unitaries, random MPS / PEPS / product
// states, amplitudes, overlaps and moment estimators.

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "rtn/ensemble.hpp"
#include "rtn/lattice.hpp"
#include "rtn/types.hpp"

namespace rtn {

using Rng = std::mt19937_64;

/// Independent stream for sample `index`, derived from `seed` by splitmix64.
Rng sample_stream(std::uint64_t seed, std::uint64_t index);

/// Haar unitary: QR of a complex Ginibre matrix, columns rescaled by the
/// phases of diag(R).
MatrixXcd haar_unitary(int q, Rng& rng);
/// First `n` columns of a Haar unitary of size q.
MatrixXcd haar_isometry(int q, int n, Rng& rng);

/// log|z| and arg(z) kept apart so that amplitudes of 64 qubits do not underflow.
struct LogAmplitude {
  double log_abs = 0.0;
  Complex phase{1.0, 0.0};

  Complex value() const;
  /// log of D |z|^2 for a Hilbert space of dimension e^log_dim.
  double log_w(double log_dim) const { return log_dim + 2.0 * log_abs; }
};

struct MPSState {
  int N = 0;
  int d = 2;
  Boundary boundary = Boundary::OBC;
  /// bonds[i] is the bond between sites i-1 and i; bonds[0] = bonds[N]
  /// (both 1 for OBC, chi for PBC where the two ends are traced).
  std::vector<int> bonds;
  /// tensors[i][s] is the bonds[i] x bonds[i+1] matrix of physical index s.
  std::vector<std::vector<MatrixXcd>> tensors;
  std::uint64_t seed = 0;
  /// False for PBC states, whose norm is random.
  bool normalized = true;
};

struct PEPSState {
  IsometricLayout layout;
  /// Per site the isometry from (left, down) to (phys, up, right): row
  /// (s * up + u) * right + r, column l * down + b.
  std::vector<MatrixXcd> isometries;
  std::uint64_t seed = 0;

  int L() const { return layout.width(); }
  int d() const { return layout.d(); }
  /// Element of the site tensor with legs (phys, left, right, up, down).
  Complex element(int x, int y, int s, int l, int r, int u, int b) const;
};

/// Staircase RMPS. OBC states are compressed to bonds min(d^i, chi, d^(N-i))
/// without changing the state.
MPSState sample_rmps(int N, int d, int chi, Boundary boundary, Rng& rng);
MPSState sample_rps(int N, int d, Rng& rng);
PEPSState sample_peps(int L, int d, int chi, Rng& rng);
/// Product state |0...0> in MPS form.
MPSState product_zero_state(int N, int d);

LogAmplitude amplitude_log(const MPSState& state, const std::vector<int>& x);
LogAmplitude amplitude_zero_log(const MPSState& state);
Complex amplitude(const MPSState& state, const std::vector<int>& x);
Complex amplitude_zero(const MPSState& state);

/// Row-by-row boundary contraction. Throws BudgetError when the boundary
/// vector would exceed `budget_mb`.
LogAmplitude amplitude_log(const PEPSState& state, const std::vector<int>& x,
                           double budget_mb = 1024.0);
Complex amplitude(const PEPSState& state, const std::vector<int>& x, double budget_mb = 1024.0);
Complex amplitude_zero(const PEPSState& state, double budget_mb = 1024.0);

/// <a|b>. Throws ShapeError when N or d differ.
LogAmplitude overlap_log(const MPSState& a, const MPSState& b);
Complex overlap(const MPSState& a, const MPSState& b);

/// Dense state vector, site 0 most significant. Throws UnsupportedSizeError above 12 sites.
VectorXcd to_dense(const MPSState& state);
VectorXcd to_dense(const PEPSState& state);

struct MomentEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t count = 0;
  int k = 1;
  std::string quantity;
};

struct Histogram {
  std::vector<double> edges;
  std::vector<std::int64_t> counts;
  std::int64_t total = 0;
  std::int64_t underflow = 0;
  std::int64_t overflow = 0;
  bool raw_retained = false;

  /// `bins` log-spaced bins over [lo, hi].
  static Histogram log_spaced(double lo, double hi, int bins);
  void add(double w);
};

struct SamplerOptions {
  std::uint64_t seed = 0;
  std::int64_t samples = 1000;
  /// 0 uses std::thread::hardware_concurrency().
  int threads = 0;
  /// Keep every w for KS tests.
  bool keep_samples = false;
  /// Target a uniformly random basis string per sample instead of 0...0.
  bool random_basis_string = false;
  double budget_mb = 1024.0;
  double hist_lo = 1e-4;
  double hist_hi = 1e2;
  int hist_bins = 100;
};

struct MonteCarloResult {
  MomentEstimate estimate;
  Histogram histogram;
  /// w = D |amplitude|^2 (IPR) or D |<psi|psi'>|^2 (FP), in sample order.
  std::vector<double> w;
};

/// D E|<x|psi>|^{2k} for chains (OBC or PBC) and square PEPS.
MonteCarloResult mc_ipr(const EnsembleParams& p, const SamplerOptions& options);
/// E|<psi|psi'>|^{2k} over independent OBC chain pairs.
MonteCarloResult mc_fp(const EnsembleParams& p, const SamplerOptions& options);

/// k-th moment estimate from retained samples: mean of exp(k log w + log_scale).
/// With log_scale = (1 - k) log D this is the IPR estimator of mc_ipr.
MomentEstimate moment_from_samples(const std::vector<double>& w, int k, double log_scale,
                                   const std::string& quantity);

/// CSV "N,d,chi,k,boundary,geometry,quantity,mean,stderr,n,seed" (header when `header`).
void write_estimate_csv(std::ostream& out, const EnsembleParams& p,
                        const MomentEstimate& estimate, std::uint64_t seed, bool header);
/// CSV "bin_lo,bin_hi,count".
void write_histogram_csv(std::ostream& out, const Histogram& histogram);
/// One log w per line.
void write_raw_samples(std::ostream& out, const std::vector<double>& w);

}  // namespace rtn
