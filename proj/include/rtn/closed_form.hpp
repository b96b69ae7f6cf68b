#pragma once

// Closed-form moments of random product states, random MPS and Haar states.
// Everything is computed in log space; ratios to the Haar value are built from
// log1p terms so that Delta = I / I_Haar - 1 stays accurate when both values
// underflow.

#include <cmath>
#include <limits>
#include <utility>

#include "rtn/ensemble.hpp"

namespace rtn {

/// Natural log of a positive quantity.
struct LogValue {
  double log_value = 0.0;

  /// exp(log_value); +inf or 0 when outside the double range.
  double value() const { return std::exp(log_value); }
  bool representable() const {
    return log_value < std::log(std::numeric_limits<double>::max()) &&
           log_value > std::log(std::numeric_limits<double>::min());
  }
};

/// A closed-form value together with its deviation from the Haar reference.
struct HaarComparison {
  LogValue value;
  LogValue haar;
  double delta_vs_haar = 0.0;  ///< value / haar - 1
};

struct ClosedFormOptions {
  /// Evaluate the OBC formula at real r = log_d chi when chi is not a power of d.
  bool analytic_continuation = false;
};

/// I_Haar = D k! / prod_{j=0}^{k-1} (D + j), given log D.
LogValue haar_ipr_log_dim(double log_dim, int k);
LogValue haar_ipr(int d, int N, int k);

/// F_Haar = 1 / binom(D + k - 1, k).
LogValue haar_fp_log_dim(double log_dim, int k);
LogValue haar_fp(int d, int N, int k);

/// Exact OBC IPR of the staircase RMPS.
/// Throws DomainError when N - r - 1 < 0 or chi is not a power of d (unless
/// analytic continuation is requested).
LogValue rmps_ipr_obc(const EnsembleParams& p, ClosedFormOptions options = {});
HaarComparison rmps_ipr_obc_vs_haar(const EnsembleParams& p, ClosedFormOptions options = {});

/// Leading large-chi behaviour I_Haar (1 + k(k-1)(d-1) / (2 d chi))^N.
LogValue rmps_ipr_leading(const EnsembleParams& p);
HaarComparison rmps_ipr_leading_vs_haar(const EnsembleParams& p);

/// Limit of I / I_Haar along chi = N gamma (d-1)/d: exp(k(k-1) / (2 gamma)).
double scaling_ratio(double gamma, int k);

/// PBC IPR, D sum_lambda f_lambda^2 (c_lambda(chi) / c_lambda(d chi))^N.
LogValue rmps_ipr_pbc(const EnsembleParams& p);
HaarComparison rmps_ipr_pbc_vs_haar(const EnsembleParams& p);

/// Random product states, D binom(d + k - 1, k)^-N.
LogValue rps_ipr(int N, int d, int k);

/// Frame-potential model ratio F / F_Haar = (1 + a k(k-1) / (2 chi^2))^N.
double fp_scaling_model(int N, double chi, int k, double a);

/// Harmonic number H_n by direct summation.
double harmonic_number(int n);
/// Trigamma at a positive integer via the recurrence from psi1(1) = pi^2/6.
double trigamma_integer(int n);

/// (mu, sigma^2) of log w_i for a single Haar qudit: mu = log d - H_{d-1},
/// sigma^2 = pi^2/6 - psi1(d).
std::pair<double, double> rps_lognormal_params(int d);

}  // namespace rtn
