#include "rtn/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "rtn/errors.hpp"
#include "rtn/replica_algebra.hpp"

namespace rtn {

std::string_view to_string(Boundary b) { return b == Boundary::OBC ? "obc" : "pbc"; }
std::string_view to_string(Geometry g) { return g == Geometry::Chain ? "chain" : "square"; }

Boundary parse_boundary(std::string_view text) {
  if (text == "obc" || text == "OBC") return Boundary::OBC;
  if (text == "pbc" || text == "PBC") return Boundary::PBC;
  throw InvalidArgument("unknown boundary '" + std::string(text) + "'");
}

Geometry parse_geometry(std::string_view text) {
  if (text == "chain") return Geometry::Chain;
  if (text == "square") return Geometry::Square;
  throw InvalidArgument("unknown geometry '" + std::string(text) + "'");
}

void EnsembleParams::validate() const {
  if (N < 1 || chi < 1 || k < 1) throw InvalidArgument("N, chi and k must be positive");
  if (d < 2) throw InvalidArgument("local dimension d must be >= 2");
  if (geometry == Geometry::Square && (L < 1 || L * L != N))
    throw InvalidArgument("square geometry requires N = L * L");
}

bool is_power_of(int chi, int d, int* exponent) {
  if (chi < 1 || d < 2) return false;
  long long power = 1;
  int r = 0;
  while (power < chi) {
    power *= d;
    ++r;
  }
  if (power != chi) return false;
  if (exponent) *exponent = r;
  return true;
}

namespace {

double log_factorial(int k) { return std::lgamma(static_cast<double>(k) + 1.0); }

// sum_{j=1}^{k-1} log1p(j * x)
double sum_log1p(double x, int k) {
  double total = 0.0;
  for (int j = 1; j < k; ++j) total += std::log1p(j * x);
  return total;
}

HaarComparison compare(double log_value, LogValue haar, double log_ratio) {
  return {LogValue{log_value}, haar, std::expm1(log_ratio)};
}

}  // namespace

LogValue haar_ipr_log_dim(double log_dim, int k) {
  if (k < 1) throw InvalidArgument("k must be positive");
  const double inv_dim = std::exp(-log_dim);
  return {log_factorial(k) - (k - 1) * log_dim - sum_log1p(inv_dim, k)};
}

LogValue haar_ipr(int d, int N, int k) {
  return haar_ipr_log_dim(N * std::log(static_cast<double>(d)), k);
}

LogValue haar_fp_log_dim(double log_dim, int k) {
  return {haar_ipr_log_dim(log_dim, k).log_value - log_dim};
}

LogValue haar_fp(int d, int N, int k) {
  return haar_fp_log_dim(N * std::log(static_cast<double>(d)), k);
}

HaarComparison rmps_ipr_obc_vs_haar(const EnsembleParams& p, ClosedFormOptions options) {
  p.validate();
  if (p.boundary != Boundary::OBC) throw InvalidArgument("rmps_ipr_obc requires OBC");
  double r = 0.0;
  int integer_r = 0;
  if (is_power_of(p.chi, p.d, &integer_r)) {
    r = integer_r;
  } else if (options.analytic_continuation) {
    r = p.log_d_chi();
  } else {
    throw DomainError("chi=" + std::to_string(p.chi) + " is not a power of d=" +
                      std::to_string(p.d) + "; enable analytic continuation to evaluate");
  }
  const double bulk_sites = p.N - r - 1.0;
  if (bulk_sites < -1e-12)
    throw DomainError("chi=" + std::to_string(p.chi) + " exceeds d^(N-1) for N=" +
                      std::to_string(p.N));
  const double d = p.d;
  const double dchi = d * p.chi;
  const LogValue haar = haar_ipr_log_dim(p.log_dim(), p.k);

  double per_site = 0.0;
  for (int j = 1; j < p.k; ++j) per_site += std::log1p((d - 1.0) * j / (dchi + j));
  const double log_ratio = std::max(bulk_sites, 0.0) * per_site - sum_log1p(1.0 / dchi, p.k) +
                           sum_log1p(std::exp(-p.log_dim()), p.k);
  return compare(haar.log_value + log_ratio, haar, log_ratio);
}

LogValue rmps_ipr_obc(const EnsembleParams& p, ClosedFormOptions options) {
  return rmps_ipr_obc_vs_haar(p, options).value;
}

HaarComparison rmps_ipr_leading_vs_haar(const EnsembleParams& p) {
  p.validate();
  const LogValue haar = haar_ipr_log_dim(p.log_dim(), p.k);
  const double correction =
      0.5 * p.k * (p.k - 1) * (p.d - 1.0) / (static_cast<double>(p.d) * p.chi);
  const double log_ratio = p.N * std::log1p(correction);
  return compare(haar.log_value + log_ratio, haar, log_ratio);
}

LogValue rmps_ipr_leading(const EnsembleParams& p) { return rmps_ipr_leading_vs_haar(p).value; }

double scaling_ratio(double gamma, int k) {
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  return std::exp(0.5 * k * (k - 1) / gamma);
}

HaarComparison rmps_ipr_pbc_vs_haar(const EnsembleParams& p) {
  p.validate();
  std::vector<double> log_terms;
  const double chi = p.chi;
  const double dchi = static_cast<double>(p.d) * p.chi;
  for (const IntegerPartition& lambda : partitions(p.k)) {
    const double numerator = content_polynomial(lambda, chi);
    if (numerator <= 0.0) continue;  // more rows than chi: the sector is absent
    const double denominator = content_polynomial(lambda, dchi);
    const double f = static_cast<double>(hook_dimension(lambda));
    log_terms.push_back(2.0 * std::log(f) + p.N * (std::log(numerator) - std::log(denominator)));
  }
  const double top = *std::max_element(log_terms.begin(), log_terms.end());
  double sum = 0.0;
  for (double t : log_terms) sum += std::exp(t - top);
  const double log_value = p.log_dim() + top + std::log(sum);
  const LogValue haar = haar_ipr_log_dim(p.log_dim(), p.k);
  return compare(log_value, haar, log_value - haar.log_value);
}

LogValue rmps_ipr_pbc(const EnsembleParams& p) { return rmps_ipr_pbc_vs_haar(p).value; }

LogValue rps_ipr(int N, int d, int k) {
  if (N < 1 || d < 1 || k < 1) throw InvalidArgument("rps_ipr requires N, d, k >= 1");
  double log_binom = 0.0;
  for (int j = 1; j <= k; ++j) log_binom += std::log(static_cast<double>(d + j - 1) / j);
  return {N * std::log(static_cast<double>(d)) - N * log_binom};
}

double fp_scaling_model(int N, double chi, int k, double a) {
  if (!(a > 0.0)) throw InvalidArgument("fit constant a must be positive");
  return std::exp(N * std::log1p(a * 0.5 * k * (k - 1) / (chi * chi)));
}

double harmonic_number(int n) {
  double h = 0.0;
  for (int j = 1; j <= n; ++j) h += 1.0 / j;
  return h;
}

double trigamma_integer(int n) {
  if (n < 1) throw InvalidArgument("trigamma_integer requires n >= 1");
  double value = std::numbers::pi * std::numbers::pi / 6.0;
  for (int j = 1; j < n; ++j) value -= 1.0 / (static_cast<double>(j) * j);
  return value;
}

std::pair<double, double> rps_lognormal_params(int d) {
  if (d < 2) throw InvalidArgument("rps_lognormal_params requires d >= 2");
  const double mu = std::log(static_cast<double>(d)) - harmonic_number(d - 1);
  const double sigma2 = std::numbers::pi * std::numbers::pi / 6.0 - trigamma_integer(d);
  return {mu, sigma2};
}

}  // namespace rtn
