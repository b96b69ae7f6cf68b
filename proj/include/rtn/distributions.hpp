#pragma once

// Reference densities for the rescaled overlap w = D |<x|psi>|^2.

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rtn/quadrature.hpp"

namespace rtn {

/// Haar overlaps; asymptotic e^-w when `dim` is empty.
struct PorterThomas {
  std::optional<double> dim;
};

/// Porter-Thomas variable multiplied by an independent log-normal factor.
struct ScalingPT {
  double gamma = 1.0;
};

/// Random qubit product states: -log(w / 2^N) is Gamma(N, 1).
struct RPSExactD2 {
  int N = 1;
};

/// Log-normal approximation for random product states of qudits.
struct RPSLognormal {
  int N = 1;
  int d = 2;
};

using DistributionSpec = std::variant<PorterThomas, ScalingPT, RPSExactD2, RPSLognormal>;

/// Throws InvalidArgument for non-positive parameters.
void validate(const DistributionSpec& spec);
/// Short label such as "scaling_pt(gamma=1)".
std::string describe(const DistributionSpec& spec);
/// Upper end of the support (infinity for unbounded families).
double support_max(const DistributionSpec& spec);

/// Density at w; 0 outside the support.
double pdf(const DistributionSpec& spec, double w, const QuadratureConfig& cfg = {});

struct MomentResult {
  double value = 0.0;
  /// k! e^{k(k-1)/(2 gamma)} for ScalingPT, empty otherwise.
  std::optional<double> closed_form;
};

/// k-th moment by quadrature in t = log w.
MomentResult moment(const DistributionSpec& spec, int k, const QuadratureConfig& cfg = {});
/// Integral of the density, by the same quadrature as `moment`.
double normalization(const DistributionSpec& spec, const QuadratureConfig& cfg = {});

/// Cumulative distribution. Closed form where available; ScalingPT goes
/// through a cached table shared by all callers with the same gamma.
double cdf(const DistributionSpec& spec, double w, const QuadratureConfig& cfg = {});

/// Tabulated CDF: cumulative Simpson on a log-spaced grid of `points` nodes
/// over [1e-6, w_max], linear interpolation between nodes.
class CdfTable {
 public:
  CdfTable(const DistributionSpec& spec, const QuadratureConfig& cfg = {}, int points = 2048);
  double operator()(double w) const;
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> grid_;
  std::vector<double> values_;
};

/// Kolmogorov-Smirnov statistic of the empirical CDF of `samples` against `spec`.
/// Throws InvalidArgument for fewer than 100 samples.
double ks_distance(std::vector<double> samples, const DistributionSpec& spec,
                   const QuadratureConfig& cfg = {});
/// Sup distance between two CDFs on a fine grid in log w.
double ks_distance(const DistributionSpec& a, const DistributionSpec& b,
                   const QuadratureConfig& cfg = {});

/// `n` log-spaced points over [lo, hi].
std::vector<double> log_grid(double lo, double hi, int n);

/// CSV curve with header "w,pdf".
void write_density_csv(std::ostream& out, const DistributionSpec& spec,
                       const std::vector<double>& grid, const QuadratureConfig& cfg = {});

}  // namespace rtn
