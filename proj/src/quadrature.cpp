#include "rtn/quadrature.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "rtn/types.hpp"

namespace rtn {

void QuadratureConfig::validate() const {
  if (rel_tol < 1e-13) throw InvalidArgument("quadrature tolerance must be >= 1e-13");
  if (u_min > -12.0 || u_max < 12.0)
    throw InvalidArgument("quadrature window must cover [-12, 12]");
  if (max_depth < 4) throw InvalidArgument("max_depth must be >= 4");
  if (hermite_nodes < 2) throw InvalidArgument("hermite_nodes must be >= 2");
}

namespace {

struct Panel {
  const std::function<double(double)>& f;
  int max_depth;
  bool exhausted = false;
  double worst = 0.0;

  double recurse(double a, double b, double fa, double fm, double fb, double whole, double eps,
                 int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    if (!std::isfinite(flm) || !std::isfinite(frm)) throw AccuracyError("non-finite integrand", INFINITY);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth >= max_depth) {
      exhausted = true;
      worst = std::max(worst, std::abs(delta));
      return left + right + delta / 15.0;
    }
    if (std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
    return recurse(a, m, fa, flm, fm, left, 0.5 * eps, depth + 1) +
           recurse(m, b, fm, frm, fb, right, 0.5 * eps, depth + 1);
  }
};

}  // namespace

QuadratureResult adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                                  double rel_tol, int max_depth, int panels) {
  if (!(b > a)) return {0.0, 0.0};
  const double h = (b - a) / panels;
  std::vector<double> fx(2 * panels + 1);
  for (int i = 0; i <= 2 * panels; ++i) {
    fx[i] = f(a + 0.5 * h * i);
    if (!std::isfinite(fx[i])) throw AccuracyError("non-finite integrand", INFINITY);
  }
  double scale = 0.0;
  for (int p = 0; p < panels; ++p)
    scale += h / 6.0 * (std::abs(fx[2 * p]) + 4.0 * std::abs(fx[2 * p + 1]) + std::abs(fx[2 * p + 2]));
  if (scale == 0.0) return {0.0, 0.0};
  const double eps = rel_tol * scale / panels;

  Panel panel{f, max_depth};
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + h * p;
    const double hi = lo + h;
    const double whole = h / 6.0 * (fx[2 * p] + 4.0 * fx[2 * p + 1] + fx[2 * p + 2]);
    total += panel.recurse(lo, hi, fx[2 * p], fx[2 * p + 1], fx[2 * p + 2], whole, eps, 0);
  }
  if (panel.exhausted && panel.worst > 15.0 * rel_tol * scale)
    throw AccuracyError("adaptive Simpson did not converge", panel.worst / scale);
  return {total, panel.worst};
}

QuadratureResult romberg(const std::function<double(double)>& f, double a, double b,
                         double rel_tol, int max_level) {
  if (!(b > a)) return {0.0, 0.0};
  std::vector<double> previous(1, 0.5 * (b - a) * (f(a) + f(b)));
  std::vector<double> current;
  long long intervals = 1;
  double best = previous[0];
  double change = std::abs(best);
  for (int level = 1; level <= max_level; ++level) {
    const double h = (b - a) / (2.0 * intervals);
    double midpoints = 0.0;
    for (long long i = 0; i < intervals; ++i) midpoints += f(a + (2 * i + 1) * h);
    intervals *= 2;
    current.assign(level + 1, 0.0);
    current[0] = 0.5 * previous[0] + h * midpoints;
    double factor = 1.0;
    for (int j = 1; j <= level; ++j) {
      factor *= 4.0;
      current[j] = current[j - 1] + (current[j - 1] - previous[j - 1]) / (factor - 1.0);
    }
    change = std::abs(current[level] - previous[level - 1]);
    best = current[level];
    if (level >= 5 && change <= rel_tol * std::abs(best)) return {best, change};
    previous.swap(current);
  }
  throw AccuracyError("Romberg integration did not converge", change / std::abs(best));
}

namespace {

HermiteRule build_hermite(int n) {
  // Jacobi matrix of the Hermite polynomials: off-diagonal sqrt(i/2).
  MatrixXd jacobi = MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    jacobi(i, i - 1) = std::sqrt(0.5 * i);
    jacobi(i - 1, i) = jacobi(i, i - 1);
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(jacobi);
  HermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double mu0 = std::sqrt(std::numbers::pi);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = solver.eigenvalues()(i);
    const double v = solver.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v * v;
  }
  return rule;
}

}  // namespace

const HermiteRule& gauss_hermite(int n) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<const HermiteRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<const HermiteRule>(build_hermite(n));
  return *slot;
}

}  // namespace rtn
