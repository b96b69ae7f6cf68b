#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "rtn/errors.hpp"

namespace rtn {

enum class QuadratureScheme { AdaptiveSimpson, GaussHermite };

struct QuadratureConfig {
  QuadratureScheme scheme = QuadratureScheme::AdaptiveSimpson;
  /// Initial window in the Gaussian variable; extended automatically.
  double u_min = -12.0;
  double u_max = 12.0;
  double rel_tol = 1e-10;
  /// Maximum recursion depth of each adaptive Simpson panel.
  int max_depth = 40;
  int hermite_nodes = 200;

  /// Throws InvalidArgument when tolerance < 1e-13 or the window misses [-12, 12].
  void validate() const;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

/// Adaptive Simpson over [a, b] split into `panels` equal starting panels.
/// Throws AccuracyError when a panel exhausts `max_depth` without meeting
/// its share of `rel_tol * |integral|`.
QuadratureResult adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                                  double rel_tol, int max_depth = 40, int panels = 64);

/// Romberg extrapolation of the doubled trapezoid rule; stops once successive
/// diagonal entries agree to `rel_tol`. Throws AccuracyError after `max_level`.
QuadratureResult romberg(const std::function<double(double)>& f, double a, double b,
                         double rel_tol, int max_level = 18);

/// Gauss-Hermite nodes and weights for weight exp(-x^2), by Golub-Welsch.
struct HermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const HermiteRule& gauss_hermite(int n);

}  // namespace rtn
