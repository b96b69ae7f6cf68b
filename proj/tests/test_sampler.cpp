#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "rtn/closed_form.hpp"
#include "rtn/contraction.hpp"
#include "rtn/errors.hpp"
#include "rtn/lattice.hpp"
#include "rtn/replica_algebra.hpp"
#include "rtn/sampler.hpp"

using namespace rtn;

namespace {

// |z - target| within three standard errors.
bool within_3sigma(const MomentEstimate& e, double target) {
  return std::abs(e.mean - target) <= 3.0 * e.std_error;
}

struct Running {
  double mean = 0.0, m2 = 0.0;
  long n = 0;
  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double std_error() const { return std::sqrt(m2 / (n - 1) / n); }
  bool near(double target) const { return std::abs(mean - target) <= 3.0 * std_error(); }
};

double two_sample_ks(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double worst = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    worst = std::max(worst, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return worst;
}

SamplerOptions options(std::uint64_t seed, std::int64_t samples) {
  SamplerOptions o;
  o.seed = seed;
  o.samples = samples;
  return o;
}

std::vector<int> random_string(int n, int d, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, d - 1);
  std::vector<int> x(n);
  for (int& s : x) s = pick(rng);
  return x;
}

}  // namespace

TEST_CASE("haar_unitary is unitary") {
  Rng rng = sample_stream(1, 0);
  for (int q = 1; q <= 24; ++q) {
    const MatrixXcd u = haar_unitary(q, rng);
    CHECK((u.adjoint() * u - MatrixXcd::Identity(q, q)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  const MatrixXcd v = haar_isometry(12, 5, rng);
  CHECK(v.rows() == 12);
  CHECK(v.cols() == 5);
  CHECK((v.adjoint() * v - MatrixXcd::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("haar_unitary q = 1 is a uniform phase") {
  Running re, im;
  for (int i = 0; i < 100000; ++i) {
    Rng rng = sample_stream(11, i);
    const Complex z = haar_unitary(1, rng)(0, 0);
    CHECK(std::abs(std::abs(z) - 1.0) < 1e-14);
    re.add(z.real());
    im.add(z.imag());
  }
  CHECK(re.near(0.0));
  CHECK(im.near(0.0));
}

TEST_CASE("haar_unitary moments") {
  Running u00, trace2, trace;
  for (int i = 0; i < 100000; ++i) {
    Rng rng = sample_stream(12, i);
    u00.add(std::norm(haar_unitary(2, rng)(0, 0)));
    const MatrixXcd u = haar_unitary(4, rng);
    trace2.add(std::norm(u.trace()));
    trace.add(u.trace().real());
  }
  CHECK(u00.near(0.5));
  // Phase-sensitive: E|tr U|^2 = 1 and E tr U = 0 only with the diagonal correction.
  CHECK(trace2.near(1.0));
  CHECK(trace.near(0.0));
}

TEST_CASE("sample streams are reproducible and distinct") {
  Rng a = sample_stream(5, 3), b = sample_stream(5, 3), c = sample_stream(5, 4), e = sample_stream(6, 3);
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
  CHECK(x != e());
}

TEST_CASE("sample_rmps bond profile and norm") {
  Rng rng = sample_stream(2, 0);
  const MPSState s = sample_rmps(4, 2, 2, Boundary::OBC, rng);
  CHECK(s.bonds == std::vector<int>{1, 2, 2, 2, 1});
  CHECK(std::abs(overlap(s, s) - 1.0) <= 1e-12);
  CHECK(s.normalized);

  for (int d : {2, 3})
    for (int N : {1, 2, 5, 8})
      for (int chi : {1, 2, 3, 4, 9}) {
        const MPSState t = sample_rmps(N, d, chi, Boundary::OBC, rng);
        REQUIRE(t.bonds.size() == static_cast<std::size_t>(N + 1));
        long long left = 1;
        for (int i = 0; i <= N; ++i) {
          long long right = 1;
          for (int j = i; j < N && right < chi; ++j) right *= d;
          CHECK(t.bonds[i] == std::min<long long>({left, chi, right}));
          left = std::min<long long>(left * d, chi);
          for (int s2 = 0; s2 < d && i < N; ++s2) {
            CHECK(t.tensors[i][s2].rows() == t.bonds[i]);
            CHECK(t.tensors[i][s2].cols() == t.bonds[i + 1]);
          }
        }
        CHECK(std::abs(overlap(t, t) - 1.0) <= 1e-10);
      }
  CHECK_THROWS_AS(sample_rmps(4, 2, 0, Boundary::OBC, rng), InvalidArgument);
}

TEST_CASE("sample_rmps at chi = 1 is a product state") {
  Rng rng = sample_stream(3, 0);
  const MPSState s = sample_rmps(5, 3, 1, Boundary::OBC, rng);
  for (int b : s.bonds) CHECK(b == 1);
  // Amplitudes factorize over sites.
  std::mt19937_64 pick(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<int> x = random_string(5, 3, pick);
    Complex product = 1.0;
    for (int i = 0; i < 5; ++i) product *= s.tensors[i][x[i]](0, 0);
    CHECK(std::abs(amplitude(s, x) - product) <= 1e-14);
  }
}

TEST_CASE("PBC states are flagged unnormalized") {
  Rng rng = sample_stream(4, 0);
  const MPSState s = sample_rmps(5, 2, 3, Boundary::PBC, rng);
  CHECK(!s.normalized);
  for (int b : s.bonds) CHECK(b == 3);
  CHECK_THROWS_AS(overlap(s, s), InvalidArgument);
}

TEST_CASE("samples are reproducible") {
  Rng a = sample_stream(99, 7), b = sample_stream(99, 7);
  const MPSState s = sample_rmps(6, 2, 4, Boundary::OBC, a);
  const MPSState t = sample_rmps(6, 2, 4, Boundary::OBC, b);
  for (int i = 0; i < 6; ++i)
    for (int x = 0; x < 2; ++x) CHECK(s.tensors[i][x] == t.tensors[i][x]);
}

TEST_CASE("amplitudes match the dense state vector") {
  std::mt19937_64 pick(2);
  for (int N : {1, 3, 6, 10})
    for (int chi : {1, 2, 4}) {
      Rng rng = sample_stream(N * 10 + chi, 0);
      const MPSState s = sample_rmps(N, 2, chi, Boundary::OBC, rng);
      const VectorXcd dense = to_dense(s);
      CHECK(dense.norm() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(std::abs(amplitude_zero(s) - dense(0)) <= 1e-12);
      for (int trial = 0; trial < 10; ++trial) {
        const std::vector<int> x = random_string(N, 2, pick);
        long long index = 0;
        for (int v : x) index = index * 2 + v;
        CHECK(std::abs(amplitude(s, x) - dense(index)) <= 1e-12);
      }
    }
  Rng rng = sample_stream(1, 1);
  CHECK_THROWS_AS(to_dense(sample_rmps(13, 2, 2, Boundary::OBC, rng)), UnsupportedSizeError);
}

TEST_CASE("amplitude of the zero product state is one") {
  const MPSState s = product_zero_state(7, 3);
  CHECK(amplitude_zero(s) == Complex(1.0, 0.0));
  CHECK(amplitude(s, std::vector<int>(7, 1)) == Complex(0.0, 0.0));
}

TEST_CASE("single-qubit amplitude is uniform on [0, 1]") {
  Running w;
  for (int i = 0; i < 100000; ++i) {
    Rng rng = sample_stream(21, i);
    w.add(std::norm(amplitude_zero(sample_rmps(1, 2, 1, Boundary::OBC, rng))));
  }
  CHECK(w.near(0.5));
}

TEST_CASE("overlaps") {
  std::mt19937_64 pick(3);
  for (int N : {2, 5, 9}) {
    Rng rng = sample_stream(N, 2);
    const MPSState a = sample_rmps(N, 2, 4, Boundary::OBC, rng);
    const MPSState b = sample_rmps(N, 2, 2, Boundary::OBC, rng);
    CHECK(std::abs(overlap(a, a) - 1.0) <= 1e-10);
    CHECK(std::abs(overlap(a, b) - to_dense(a).dot(to_dense(b))) <= 1e-12);
  }
  Rng rng = sample_stream(1, 3);
  CHECK_THROWS_AS(overlap(sample_rmps(3, 2, 2, Boundary::OBC, rng), sample_rmps(4, 2, 2, Boundary::OBC, rng)),
                  ShapeError);
  CHECK_THROWS_AS(overlap(sample_rmps(3, 2, 1, Boundary::OBC, rng), sample_rmps(3, 3, 1, Boundary::OBC, rng)),
                  ShapeError);

  Running pair;
  for (int i = 0; i < 100000; ++i) {
    Rng r = sample_stream(31, i);
    const MPSState a = sample_rps(1, 2, r);
    const MPSState b = sample_rps(1, 2, r);
    pair.add(std::norm(overlap(a, b)));
  }
  CHECK(pair.near(0.5));
}

TEST_CASE("amplitude law is a product of Beta variables") {
  // <0|psi> after site i keeps the first right-bond block of a Haar vector in
  // dimension d * right, so |<0|psi>|^2 is a product of Beta(right, (d-1) right).
  const int N = 8, d = 2, chi = 4;
  const std::vector<int> bonds = generation_bonds(N, d, chi);
  std::mt19937_64 rng(77);
  std::vector<double> oracle(20000);
  for (double& w : oracle) {
    double log_w = N * std::log(2.0);
    for (int i = 0; i < N; ++i) {
      std::gamma_distribution<double> a(bonds[i + 1], 1.0), b((d - 1.0) * bonds[i + 1], 1.0);
      const double x = a(rng), y = b(rng);
      log_w += std::log(x / (x + y));
    }
    w = std::exp(log_w);
  }
  SamplerOptions o = options(8, 20000);
  o.keep_samples = true;
  const MonteCarloResult mc = mc_ipr(EnsembleParams::chain(N, d, chi, 2), o);
  // Critical two-sample KS value at 1%: 1.63 sqrt(2 / n).
  CHECK(two_sample_ks(mc.w, oracle) <= 1.63 * std::sqrt(2.0 / 20000));
}

TEST_CASE("Beta-product moments reproduce the closed form") {
  for (int d : {2, 3})
    for (int N : {4, 7})
      for (int chi : {1, d, d * d})
        for (int k = 1; k <= 4; ++k) {
          const std::vector<int> bonds = generation_bonds(N, d, chi);
          double log_value = N * std::log(double(d));
          for (int i = 0; i < N; ++i)
            log_value += std::log(rising_factorial(bonds[i + 1], k)) - std::log(rising_factorial(d * bonds[i + 1], k));
          CHECK(log_value == doctest::Approx(rmps_ipr_obc(EnsembleParams::chain(N, d, chi, k)).log_value).epsilon(1e-12));
        }
}

TEST_CASE("mc_ipr agrees with the closed form") {
  const MomentEstimate k1 = mc_ipr(EnsembleParams::chain(8, 2, 4, 1), options(40, 20000)).estimate;
  CHECK(within_3sigma(k1, 1.0));
  const EnsembleParams p = EnsembleParams::chain(8, 2, 4, 2);
  const MomentEstimate e = mc_ipr(p, options(41, 100000)).estimate;
  CHECK(e.count == 100000);
  CHECK(e.quantity == "ipr");
  CHECK(within_3sigma(e, rmps_ipr_obc(p).value()));
}

TEST_CASE("mc_ipr at N = 6, chi = 4 over a million samples") {
  const EnsembleParams p = EnsembleParams::chain(6, 2, 4, 2);
  const MomentEstimate e = mc_ipr(p, options(42, 1000000)).estimate;
  CHECK(within_3sigma(e, rmps_ipr_obc(p).value()));
}

TEST_CASE("mc_ipr is invariant under the target basis string") {
  const EnsembleParams p = EnsembleParams::chain(6, 3, 3, 2);
  SamplerOptions o = options(43, 100000);
  const MomentEstimate zero = mc_ipr(p, o).estimate;
  o.random_basis_string = true;
  const MomentEstimate random = mc_ipr(p, o).estimate;
  const double sigma = std::hypot(zero.std_error, random.std_error);
  CHECK(std::abs(zero.mean - random.mean) <= 3.0 * sigma);
}

TEST_CASE("mc_ipr saturates at the Haar value") {
  const EnsembleParams p = EnsembleParams::chain(4, 2, 8, 3);
  CHECK(within_3sigma(mc_ipr(p, options(44, 100000)).estimate, haar_ipr(2, 4, 3).value()));
}

TEST_CASE("PBC sampling matches the partition formula") {
  const EnsembleParams p = EnsembleParams::chain(3, 2, 2, 2, Boundary::PBC);
  CHECK(within_3sigma(mc_ipr(p, options(45, 100000)).estimate, 0.253037));
}

TEST_CASE("estimates do not depend on the thread count") {
  const EnsembleParams p = EnsembleParams::chain(6, 2, 4, 2);
  SamplerOptions o = options(46, 3000);
  o.threads = 1;
  o.keep_samples = true;
  const MonteCarloResult one = mc_ipr(p, o);
  o.threads = 3;
  const MonteCarloResult three = mc_ipr(p, o);
  CHECK(one.estimate.mean == three.estimate.mean);
  CHECK(one.estimate.std_error == three.estimate.std_error);
  CHECK(one.w == three.w);
  CHECK(one.histogram.counts == three.histogram.counts);
  // Same seed and params give identical output.
  o.threads = 1;
  CHECK(mc_ipr(p, o).w == one.w);
  CHECK(mc_ipr(p, options(47, 3000)).estimate.mean != one.estimate.mean);
}

TEST_CASE("standard error scales as one over root n") {
  const EnsembleParams p = EnsembleParams::chain(4, 2, 2, 1);
  std::vector<double> errors;
  for (int j = 0; j <= 8; ++j) errors.push_back(mc_ipr(p, options(48, 2000LL << j)).estimate.std_error);
  for (int j = 0; j < 8; ++j) {
    const double ratio = errors[j] / errors[j + 1];
    CHECK(ratio >= 1.3);
    CHECK(ratio <= 1.55);
  }
}

TEST_CASE("moment_from_samples reproduces the streaming estimator") {
  const EnsembleParams p = EnsembleParams::chain(6, 2, 2, 3);
  SamplerOptions o = options(49, 5000);
  o.keep_samples = true;
  const MonteCarloResult mc = mc_ipr(p, o);
  const MomentEstimate again = moment_from_samples(mc.w, 3, -2.0 * p.log_dim(), "ipr");
  CHECK(again.mean == doctest::Approx(mc.estimate.mean).epsilon(1e-12));
  CHECK(again.std_error == doctest::Approx(mc.estimate.std_error).epsilon(1e-9));
  CHECK(again.count == mc.estimate.count);
}

TEST_CASE("mc_fp") {
  for (int N : {2, 5, 8}) {
    const EnsembleParams p = EnsembleParams::chain(N, 2, 2, 1);
    CHECK(within_3sigma(mc_fp(p, options(50 + N, 20000)).estimate, std::exp(-p.log_dim())));
  }
  const EnsembleParams p = EnsembleParams::chain(8, 2, 4, 2);
  const MomentEstimate e = mc_fp(p, options(51, 100000)).estimate;
  CHECK(e.quantity == "fp");
  CHECK(within_3sigma(e, fp_contract(p).value.value()));
  CHECK_THROWS_AS(mc_fp(EnsembleParams::chain(4, 2, 2, 2, Boundary::PBC), options(1, 100)), InvalidArgument);
}

TEST_CASE("sampling needs at least 100 samples") {
  CHECK_THROWS_AS(mc_ipr(EnsembleParams::chain(4, 2, 2, 2), options(1, 99)), InvalidArgument);
}

TEST_CASE("sample_peps") {
  Rng rng = sample_stream(60, 0);
  const PEPSState s = sample_peps(3, 2, 2, rng);
  CHECK(to_dense(s).norm() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(amplitude_zero(s) - to_dense(s)(0)) <= 1e-12);
  // Lattice-edge bonds are trivial.
  for (const SiteLayout& site : s.layout.all_sites()) {
    if (site.x == 0) CHECK(site.left == 1);
    if (site.y == 0) CHECK(site.down == 1);
    if (site.x == 2) CHECK(site.right == 1);
    if (site.y == 2) CHECK(site.up == 1);
  }
  for (int L : {2, 3}) {
    Rng r = sample_stream(61, L);
    CHECK(to_dense(sample_peps(L, 2, 3, r)).norm() == doctest::Approx(1.0).epsilon(1e-9));
  }
  Rng r = sample_stream(62, 0);
  const PEPSState product = sample_peps(3, 3, 1, r);
  const VectorXcd dense = to_dense(product);
  // A product state has rank-one reshapes across every cut.
  Eigen::Map<const MatrixXcd> cut(dense.data(), 3, 3 * 3 * 3 * 3 * 3 * 3 * 3 * 3);
  Eigen::JacobiSVD<MatrixXcd> svd(cut);
  CHECK(svd.singularValues()(1) <= 1e-12);
  CHECK_THROWS_AS(sample_peps(1, 2, 2, r), InvalidArgument);
}

TEST_CASE("PEPS Monte Carlo matches contraction") {
  const EnsembleParams p = EnsembleParams::square(3, 2, 2, 2);
  CHECK(within_3sigma(mc_ipr(p, options(63, 20000)).estimate, peps_ipr(3, 2, 2, 2).value.value()));
}

TEST_CASE("PEPS amplitude respects the budget") {
  Rng rng = sample_stream(64, 0);
  const PEPSState s = sample_peps(4, 2, 4, rng);
  CHECK_THROWS_AS(amplitude_zero(s, 1e-6), BudgetError);
}

TEST_CASE("histograms") {
  Histogram h = Histogram::log_spaced(1e-2, 1e2, 8);
  REQUIRE(h.edges.size() == 9);
  for (std::size_t i = 1; i < h.edges.size(); ++i) CHECK(h.edges[i] > h.edges[i - 1]);
  for (double w : {1e-3, 0.5, 1.0, 3.0, 50.0, 1e3}) h.add(w);
  std::int64_t counted = h.underflow + h.overflow;
  for (auto c : h.counts) counted += c;
  CHECK(counted == h.total);
  CHECK(h.underflow == 1);
  CHECK(h.overflow == 1);

  std::ostringstream out;
  write_histogram_csv(out, h);
  CHECK(out.str().rfind("bin_lo,bin_hi,count\n", 0) == 0);
}

TEST_CASE("estimate csv") {
  MomentEstimate e{0.5, 0.01, 100, 2, "ipr"};
  std::ostringstream out;
  write_estimate_csv(out, EnsembleParams::chain(4, 2, 2, 2), e, 9, true);
  CHECK(out.str() == "N,d,chi,k,boundary,geometry,quantity,mean,stderr,n,seed\n4,2,2,2,obc,chain,ipr,0.5,0.01,100,9\n");
}
