#include "rtn/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "rtn/errors.hpp"

namespace rtn {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

using RowMajorMatrixXcd = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

MatrixXcd ginibre(int q, int n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  MatrixXcd z(q, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < q; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      z(i, j) = Complex(re, im);
    }
  return z;
}

VectorXcd diagonal_phases(const Eigen::HouseholderQR<MatrixXcd>& qr, int n) {
  VectorXcd phases(n);
  for (int j = 0; j < n; ++j) {
    const Complex r = qr.matrixQR()(j, j);
    phases(j) = std::abs(r) > 0.0 ? r / std::abs(r) : Complex(1.0, 0.0);
  }
  return phases;
}

// V v for a fresh Haar isometry V (q x n), without forming V.
VectorXcd haar_isometry_apply(int q, const VectorXcd& v, Rng& rng) {
  const int n = static_cast<int>(v.size());
  Eigen::HouseholderQR<MatrixXcd> qr(ginibre(q, n, rng));
  VectorXcd padded = VectorXcd::Zero(q);
  padded.head(n) = diagonal_phases(qr, n).cwiseProduct(v);
  return qr.householderQ() * padded;
}

void check_budget(double bytes, double budget_mb, const std::string& what) {
  const double required = bytes / (1024.0 * 1024.0);
  if (required > budget_mb)
    throw BudgetError(what + " needs " + std::to_string(required) + " MB, budget is " +
                          std::to_string(budget_mb) + " MB",
                      required, budget_mb);
}

struct Rescaled {
  double log_scale = 0.0;
  bool zero = false;
};

template <typename Derived>
void rescale(Eigen::MatrixBase<Derived>& m, Rescaled& acc) {
  const double norm = m.cwiseAbs().maxCoeff();
  if (norm == 0.0) {
    acc.zero = true;
    return;
  }
  m /= norm;
  acc.log_scale += std::log(norm);
}

LogAmplitude finish(Complex z, const Rescaled& acc) {
  if (acc.zero || std::abs(z) == 0.0)
    return {-std::numeric_limits<double>::infinity(), Complex(1.0, 0.0)};
  return {acc.log_scale + std::log(std::abs(z)), z / std::abs(z)};
}

void check_string(const std::vector<int>& x, int sites, int d) {
  if (static_cast<int>(x.size()) != sites) throw ShapeError("basis string has the wrong length");
  for (int s : x)
    if (s < 0 || s >= d) throw ShapeError("basis string entry out of range");
}

std::vector<int> uniform_string(int sites, int d, Rng& rng) {
  std::uniform_int_distribution<int> digit(0, d - 1);
  std::vector<int> x(sites);
  for (int& s : x) s = digit(rng);
  return x;
}

// Streaming <x|psi> of a fresh OBC staircase RMPS; consumes the generator in
// the same order as sample_rmps.
LogAmplitude stream_rmps_amplitude(int N, int d, int chi, const std::vector<int>* x, Rng& rng) {
  const std::vector<int> bonds = generation_bonds(N, d, chi);
  VectorXcd v = VectorXcd::Ones(1);
  Rescaled acc;
  std::vector<int> zero(N, 0);
  const std::vector<int>& target = x ? *x : zero;
  for (int i = 0; i < N; ++i) {
    const int right = bonds[i + 1];
    VectorXcd out = haar_isometry_apply(d * right, v, rng);
    v = out.segment(target[i] * right, right);
    rescale(v, acc);
  }
  return finish(v(0), acc);
}

template <typename Body>
void parallel_for(std::int64_t count, int threads, Body body) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = static_cast<int>(std::min<std::int64_t>(threads, std::max<std::int64_t>(count, 1)));
  if (threads == 1) {
    for (std::int64_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::int64_t i = t; i < count; i += threads) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

MonteCarloResult reduce(const std::vector<double>& log_w, double log_dim, int k, double shift,
                        const SamplerOptions& options, const std::string& quantity) {
  MonteCarloResult result;
  result.histogram = Histogram::log_spaced(options.hist_lo, options.hist_hi, options.hist_bins);
  double mean = 0.0;
  double m2 = 0.0;
  std::int64_t n = 0;
  for (double lw : log_w) {
    const double value = std::exp(k * (lw - log_dim) + shift);
    ++n;
    const double delta = value - mean;
    mean += delta / n;
    m2 += delta * (value - mean);
    result.histogram.add(std::exp(lw));
  }
  result.estimate.mean = mean;
  result.estimate.std_error = n > 1 ? std::sqrt(m2 / (n - 1) / n) : 0.0;
  result.estimate.count = n;
  result.estimate.k = k;
  result.estimate.quantity = quantity;
  if (options.keep_samples) {
    result.w.reserve(log_w.size());
    for (double lw : log_w) result.w.push_back(std::exp(lw));
    result.histogram.raw_retained = true;
  }
  return result;
}

void check_samples(const SamplerOptions& options) {
  if (options.samples < 100) throw InvalidArgument("at least 100 samples are required");
}

}  // namespace

Rng sample_stream(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t state = seed ^ splitmix64(index);
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state))};
  return Rng(seq);
}

MatrixXcd haar_isometry(int q, int n, Rng& rng) {
  if (q < 1 || n < 1 || n > q) throw InvalidArgument("haar_isometry needs 1 <= n <= q");
  Eigen::HouseholderQR<MatrixXcd> qr(ginibre(q, n, rng));
  MatrixXcd v = qr.householderQ() * MatrixXcd::Identity(q, n);
  return v * diagonal_phases(qr, n).asDiagonal();
}

MatrixXcd haar_unitary(int q, Rng& rng) { return haar_isometry(q, q, rng); }

Complex LogAmplitude::value() const {
  if (std::isinf(log_abs) && log_abs < 0) return Complex(0.0, 0.0);
  return std::exp(log_abs) * phase;
}

Complex PEPSState::element(int x, int y, int s, int l, int r, int u, int b) const {
  const SiteLayout& site = layout.site(x, y);
  return isometries[y * layout.width() + x]((s * site.up + u) * site.right + r, l * site.down + b);
}

MPSState sample_rmps(int N, int d, int chi, Boundary boundary, Rng& rng) {
  if (N < 1 || d < 2 || chi < 1) throw InvalidArgument("sample_rmps needs N >= 1, d >= 2, chi >= 1");
  MPSState state;
  state.N = N;
  state.d = d;
  state.boundary = boundary;
  state.tensors.resize(N);

  if (boundary == Boundary::PBC) {
    state.bonds.assign(N + 1, chi);
    state.normalized = false;
    for (int i = 0; i < N; ++i) {
      const MatrixXcd v = haar_isometry(d * chi, chi, rng);
      for (int s = 0; s < d; ++s) state.tensors[i].push_back(v.middleRows(s * chi, chi).transpose());
    }
    return state;
  }

  state.bonds = generation_bonds(N, d, chi);
  for (int i = 0; i < N; ++i) {
    const int left = state.bonds[i];
    const int right = state.bonds[i + 1];
    const MatrixXcd v = haar_isometry(d * right, left, rng);
    for (int s = 0; s < d; ++s) state.tensors[i].push_back(v.middleRows(s * right, right).transpose());
  }

  // Left-to-right QR sweep trimming bonds that exceed d * (left bond).
  for (int i = 0; i + 1 < N; ++i) {
    const int left = state.bonds[i];
    const int right = state.bonds[i + 1];
    if (d * left >= right) continue;
    MatrixXcd stacked(d * left, right);
    for (int s = 0; s < d; ++s) stacked.middleRows(s * left, left) = state.tensors[i][s];
    Eigen::HouseholderQR<MatrixXcd> qr(stacked);
    const int kept = d * left;
    const MatrixXcd q = qr.householderQ() * MatrixXcd::Identity(d * left, kept);
    const MatrixXcd r = qr.matrixQR().topRows(kept).triangularView<Eigen::Upper>();
    for (int s = 0; s < d; ++s) {
      state.tensors[i][s] = q.middleRows(s * left, left);
      state.tensors[i + 1][s] = r * state.tensors[i + 1][s];
    }
    state.bonds[i + 1] = kept;
  }
  return state;
}

MPSState sample_rps(int N, int d, Rng& rng) { return sample_rmps(N, d, 1, Boundary::OBC, rng); }

MPSState product_zero_state(int N, int d) {
  MPSState state;
  state.N = N;
  state.d = d;
  state.bonds.assign(N + 1, 1);
  state.tensors.resize(N);
  for (int i = 0; i < N; ++i)
    for (int s = 0; s < d; ++s) state.tensors[i].push_back(MatrixXcd::Constant(1, 1, s == 0 ? 1.0 : 0.0));
  return state;
}

PEPSState sample_peps(int L, int d, int chi, Rng& rng) {
  if (L < 2) throw InvalidArgument("sample_peps needs L >= 2");
  PEPSState state{IsometricLayout::square(L, d, chi), {}, 0};
  for (const SiteLayout& site : state.layout.all_sites())
    state.isometries.push_back(haar_isometry(site.unitary_size(d), site.inputs(), rng));
  return state;
}

LogAmplitude amplitude_log(const MPSState& state, const std::vector<int>& x) {
  check_string(x, state.N, state.d);
  Rescaled acc;
  if (state.boundary == Boundary::PBC) {
    MatrixXcd m = MatrixXcd::Identity(state.bonds[0], state.bonds[0]);
    for (int i = 0; i < state.N; ++i) {
      m = m * state.tensors[i][x[i]];
      rescale(m, acc);
    }
    return finish(m.trace(), acc);
  }
  RowVectorXcd v = RowVectorXcd::Ones(1);
  for (int i = 0; i < state.N; ++i) {
    v = v * state.tensors[i][x[i]];
    rescale(v, acc);
  }
  return finish(v(0), acc);
}

LogAmplitude amplitude_zero_log(const MPSState& state) {
  return amplitude_log(state, std::vector<int>(state.N, 0));
}

Complex amplitude(const MPSState& state, const std::vector<int>& x) {
  return amplitude_log(state, x).value();
}

Complex amplitude_zero(const MPSState& state) { return amplitude_zero_log(state).value(); }

LogAmplitude amplitude_log(const PEPSState& state, const std::vector<int>& x, double budget_mb) {
  const IsometricLayout& layout = state.layout;
  const int width = layout.width();
  check_string(x, layout.sites(), layout.d());

  // Slots [u_0 .. u_{x-1}, h, b_x .. b_{W-1}]; the first row sees only unit bonds.
  std::vector<int> dims(width + 1, 1);
  double largest = 1.0;
  {
    std::vector<int> trial(width + 1, 1);
    for (const SiteLayout& site : layout.all_sites()) {
      if (site.x == 0) std::rotate(trial.rbegin(), trial.rbegin() + 1, trial.rend());
      double before = 1.0;
      for (int v : trial) before *= v;
      trial[site.x] = site.up;
      trial[site.x + 1] = site.right;
      double after = 1.0;
      for (int v : trial) after *= v;
      largest = std::max({largest, before, after});
    }
  }
  check_budget(2.0 * largest * sizeof(Complex), budget_mb, "PEPS boundary contraction");

  VectorXcd data = VectorXcd::Ones(1);
  Rescaled acc;
  for (int index = 0; index < layout.sites(); ++index) {
    const SiteLayout& site = layout.site(index);
    if (site.x == 0) std::rotate(dims.rbegin(), dims.rbegin() + 1, dims.rend());
    long long pre = 1;
    for (int j = 0; j < site.x; ++j) pre *= dims[j];
    long long post = 1;
    for (int j = site.x + 2; j <= width; ++j) post *= dims[j];
    const int in = site.left * site.down;
    const int out = site.up * site.right;
    const MatrixXcd& v = state.isometries[index];
    const MatrixXcd block = v.middleRows(static_cast<long long>(x[index]) * out, out);
    VectorXcd next(pre * out * post);
    for (long long p = 0; p < pre; ++p) {
      Eigen::Map<const RowMajorMatrixXcd> src(data.data() + p * in * post, in, post);
      Eigen::Map<RowMajorMatrixXcd> dst(next.data() + p * out * post, out, post);
      dst.noalias() = block * src;
    }
    data.swap(next);
    dims[site.x] = site.up;
    dims[site.x + 1] = site.right;
    rescale(data, acc);
  }
  return finish(data(0), acc);
}

Complex amplitude(const PEPSState& state, const std::vector<int>& x, double budget_mb) {
  return amplitude_log(state, x, budget_mb).value();
}

Complex amplitude_zero(const PEPSState& state, double budget_mb) {
  return amplitude(state, std::vector<int>(state.layout.sites(), 0), budget_mb);
}

LogAmplitude overlap_log(const MPSState& a, const MPSState& b) {
  if (a.N != b.N || a.d != b.d) throw ShapeError("overlap needs states with equal N and d");
  if (a.boundary != Boundary::OBC || b.boundary != Boundary::OBC)
    throw InvalidArgument("overlap is implemented for OBC states");
  MatrixXcd env = MatrixXcd::Ones(1, 1);
  Rescaled acc;
  for (int i = 0; i < a.N; ++i) {
    MatrixXcd next = MatrixXcd::Zero(a.bonds[i + 1], b.bonds[i + 1]);
    for (int s = 0; s < a.d; ++s) next.noalias() += a.tensors[i][s].adjoint() * env * b.tensors[i][s];
    env.swap(next);
    rescale(env, acc);
  }
  return finish(env(0, 0), acc);
}

Complex overlap(const MPSState& a, const MPSState& b) { return overlap_log(a, b).value(); }

namespace {

template <typename AmplitudeFn>
VectorXcd dense_from_amplitudes(int sites, int d, AmplitudeFn fn) {
  if (sites > 12) throw UnsupportedSizeError("dense state vectors are limited to 12 sites");
  long long dim = 1;
  for (int i = 0; i < sites; ++i) dim *= d;
  VectorXcd psi(dim);
  std::vector<int> x(sites, 0);
  for (long long index = 0; index < dim; ++index) {
    long long rest = index;
    for (int i = sites - 1; i >= 0; --i) {
      x[i] = static_cast<int>(rest % d);
      rest /= d;
    }
    psi(index) = fn(x);
  }
  return psi;
}

}  // namespace

VectorXcd to_dense(const MPSState& state) {
  return dense_from_amplitudes(state.N, state.d,
                               [&](const std::vector<int>& x) { return amplitude(state, x); });
}

VectorXcd to_dense(const PEPSState& state) {
  return dense_from_amplitudes(state.layout.sites(), state.d(),
                               [&](const std::vector<int>& x) { return amplitude(state, x); });
}

Histogram Histogram::log_spaced(double lo, double hi, int bins) {
  if (!(lo > 0.0) || !(hi > lo) || bins < 1) throw InvalidArgument("invalid histogram range");
  Histogram h;
  h.edges.resize(bins + 1);
  for (int i = 0; i <= bins; ++i) h.edges[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / bins);
  h.edges.front() = lo;
  h.edges.back() = hi;
  h.counts.assign(bins, 0);
  return h;
}

void Histogram::add(double w) {
  ++total;
  if (w < edges.front()) {
    ++underflow;
    return;
  }
  if (w >= edges.back()) {
    ++overflow;
    return;
  }
  const auto it = std::upper_bound(edges.begin(), edges.end(), w);
  ++counts[static_cast<std::size_t>(it - edges.begin()) - 1];
}

MonteCarloResult mc_ipr(const EnsembleParams& p, const SamplerOptions& options) {
  p.validate();
  check_samples(options);
  std::vector<double> log_w(options.samples);
  const double log_dim = p.log_dim();

  if (p.geometry == Geometry::Square) {
    const IsometricLayout layout = IsometricLayout::square(p.L, p.d, p.chi);
    double bytes = 0.0;
    for (const SiteLayout& s : layout.all_sites())
      bytes += static_cast<double>(s.unitary_size(p.d)) * s.inputs() * sizeof(Complex);
    check_budget(bytes, options.budget_mb, "PEPS sample");
    parallel_for(options.samples, options.threads, [&](std::int64_t i) {
      Rng rng = sample_stream(options.seed, static_cast<std::uint64_t>(i));
      const PEPSState state = sample_peps(p.L, p.d, p.chi, rng);
      const std::vector<int> x = options.random_basis_string
                                     ? uniform_string(p.N, p.d, rng)
                                     : std::vector<int>(p.N, 0);
      log_w[i] = amplitude_log(state, x, options.budget_mb).log_w(log_dim);
    });
  } else if (p.boundary == Boundary::PBC) {
    check_budget(static_cast<double>(p.N) * p.d * p.chi * p.chi * sizeof(Complex), options.budget_mb,
                 "PBC sample");
    parallel_for(options.samples, options.threads, [&](std::int64_t i) {
      Rng rng = sample_stream(options.seed, static_cast<std::uint64_t>(i));
      const MPSState state = sample_rmps(p.N, p.d, p.chi, Boundary::PBC, rng);
      const std::vector<int> x = options.random_basis_string
                                     ? uniform_string(p.N, p.d, rng)
                                     : std::vector<int>(p.N, 0);
      log_w[i] = amplitude_log(state, x).log_w(log_dim);
    });
  } else {
    check_budget(static_cast<double>(p.d) * p.chi * p.chi * sizeof(Complex) * 2.0, options.budget_mb,
                 "RMPS sample");
    parallel_for(options.samples, options.threads, [&](std::int64_t i) {
      Rng rng = sample_stream(options.seed, static_cast<std::uint64_t>(i));
      if (options.random_basis_string) {
        const std::vector<int> x = uniform_string(p.N, p.d, rng);
        log_w[i] = stream_rmps_amplitude(p.N, p.d, p.chi, &x, rng).log_w(log_dim);
      } else {
        log_w[i] = stream_rmps_amplitude(p.N, p.d, p.chi, nullptr, rng).log_w(log_dim);
      }
    });
  }
  // D E|a|^{2k} = E[w^k] / D^{k-1}
  return reduce(log_w, log_dim, p.k, log_dim, options, "ipr");
}

MonteCarloResult mc_fp(const EnsembleParams& p, const SamplerOptions& options) {
  p.validate();
  check_samples(options);
  if (p.geometry != Geometry::Chain || p.boundary != Boundary::OBC)
    throw InvalidArgument("mc_fp is implemented for OBC chains");
  double bytes = 0.0;
  for (int b : generation_bonds(p.N, p.d, p.chi)) bytes += 2.0 * p.d * b * b * sizeof(Complex);
  check_budget(bytes, options.budget_mb, "RMPS pair sample");
  std::vector<double> log_w(options.samples);
  const double log_dim = p.log_dim();
  parallel_for(options.samples, options.threads, [&](std::int64_t i) {
    Rng rng = sample_stream(options.seed, static_cast<std::uint64_t>(i));
    const MPSState a = sample_rmps(p.N, p.d, p.chi, Boundary::OBC, rng);
    const MPSState b = sample_rmps(p.N, p.d, p.chi, Boundary::OBC, rng);
    log_w[i] = overlap_log(a, b).log_w(log_dim);
  });
  return reduce(log_w, log_dim, p.k, 0.0, options, "fp");
}

MomentEstimate moment_from_samples(const std::vector<double>& w, int k, double log_scale,
                                   const std::string& quantity) {
  MomentEstimate estimate;
  double m2 = 0.0;
  for (double value : w) {
    const double x = std::exp(k * std::log(value) + log_scale);
    ++estimate.count;
    const double delta = x - estimate.mean;
    estimate.mean += delta / estimate.count;
    m2 += delta * (x - estimate.mean);
  }
  if (estimate.count > 1) estimate.std_error = std::sqrt(m2 / (estimate.count - 1) / estimate.count);
  estimate.k = k;
  estimate.quantity = quantity;
  return estimate;
}

void write_estimate_csv(std::ostream& out, const EnsembleParams& p,
                        const MomentEstimate& estimate, std::uint64_t seed, bool header) {
  if (header) out << "N,d,chi,k,boundary,geometry,quantity,mean,stderr,n,seed\n";
  const auto precision = out.precision(17);
  out << p.N << ',' << p.d << ',' << p.chi << ',' << estimate.k << ',' << to_string(p.boundary) << ','
      << to_string(p.geometry) << ',' << estimate.quantity << ',' << estimate.mean << ','
      << estimate.std_error << ',' << estimate.count << ',' << seed << '\n';
  out.precision(precision);
}

void write_histogram_csv(std::ostream& out, const Histogram& histogram) {
  out << "bin_lo,bin_hi,count\n";
  const auto precision = out.precision(17);
  for (std::size_t i = 0; i < histogram.counts.size(); ++i)
    out << histogram.edges[i] << ',' << histogram.edges[i + 1] << ',' << histogram.counts[i] << '\n';
  out.precision(precision);
}

void write_raw_samples(std::ostream& out, const std::vector<double>& w) {
  const auto precision = out.precision(17);
  for (double value : w) out << std::log(value) << '\n';
  out.precision(precision);
}

}  // namespace rtn
