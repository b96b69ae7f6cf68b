#include "rtn/contraction.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <tuple>

#include "rtn/errors.hpp"
#include "rtn/replica_algebra.hpp"

namespace rtn {

namespace {

void check_budget(double entries, double budget_mb, const std::string& what) {
  const double required = entries * sizeof(double) / (1024.0 * 1024.0);
  if (required > budget_mb)
    throw BudgetError(what + " needs " + std::to_string(required) + " MB, budget is " +
                          std::to_string(budget_mb) + " MB",
                      required, budget_mb);
}

// Keeps a dense real vector or matrix at unit max-norm while tracking log scale.
template <typename Derived>
void rescale(Eigen::MatrixBase<Derived>& m, double& log_scale) {
  const double norm = m.cwiseAbs().maxCoeff();
  if (norm == 0.0) throw DomainError("replica contraction vanished");
  m /= norm;
  log_scale += std::log(norm);
}

HaarComparison compare_ipr(double log_value, double log_dim, int k) {
  const LogValue haar = haar_ipr_log_dim(log_dim, k);
  return {LogValue{log_value}, haar, std::expm1(log_value - haar.log_value)};
}

// Coefficient map of one averaged isometry from an n-dimensional input to a
// q-dimensional output, acting on S_k labels of the input bond.
MatrixXd site_map(int k, int n, int q) {
  const SymmetricGroup& group = SymmetricGroup::get(k);
  const int K = group.order();
  if (n == q) return MatrixXd::Identity(K, K);
  if (n == 1) return MatrixXd::Constant(K, K, 1.0 / rising_factorial(q, k));
  return weingarten_matrix(k, q).entries * gram_matrix(k, n).entries;
}

double sum_positive(double sum, const std::string& what) {
  if (!(sum > 0.0)) throw DomainError(what + " produced a non-positive value");
  return std::log(sum);
}

// M[sigma; alpha * K + beta] for a PEPS site with inputs (left, down).
MatrixXd peps_site_tensor(int k, const SiteLayout& site, int d) {
  const SymmetricGroup& group = SymmetricGroup::get(k);
  const int K = group.order();
  const int q = site.unitary_size(d);
  const int n = site.inputs();
  MatrixXd m(K, K * K);
  if (n == 1) {
    m.setConstant(1.0 / rising_factorial(q, k));
    return m;
  }
  if (n == q && (site.left == 1 || site.down == 1)) {
    m.setZero();
    for (int s = 0; s < K; ++s)
      for (int other = 0; other < K; ++other) {
        if (site.down == 1)
          m(s, s * K + other) = 1.0;
        else
          m(s, other * K + s) = 1.0;
      }
    return m;
  }
  const MatrixXd wg = weingarten_matrix(k, q).entries;
  const MatrixXd gl = gram_matrix(k, site.left).entries;
  const MatrixXd gb = gram_matrix(k, site.down).entries;
  for (int s = 0; s < K; ++s)
    for (int a = 0; a < K; ++a)
      for (int b = 0; b < K; ++b) {
        double total = 0.0;
        for (int p = 0; p < K; ++p) total += wg(s, p) * gl(p, a) * gb(p, b);
        m(s, a * K + b) = total;
      }
  return m;
}

long long int_pow(long long base, int exponent) {
  long long value = 1;
  for (int i = 0; i < exponent; ++i) value *= base;
  return value;
}

}  // namespace

TransferOperator ipr_transfer(int d, int chi, int k) {
  if (d < 2 || chi < 1) throw InvalidArgument("ipr_transfer needs d >= 2 and chi >= 1");
  return {d, chi, k, 1, weingarten_matrix(k, d * chi).entries * gram_matrix(k, chi).entries};
}

TransferOperator fp_transfer(int d, int chi, int k, double budget_mb) {
  if (d < 2 || chi < 1) throw InvalidArgument("fp_transfer needs d >= 2 and chi >= 1");
  const SymmetricGroup& group = SymmetricGroup::get(k);
  const int K = group.order();
  const double K2 = static_cast<double>(K) * K;
  check_budget(K2 * K2, budget_mb, "frame-potential transfer matrix");
  const MatrixXd wg = weingarten_matrix(k, d * chi).entries;
  const MatrixXd g = gram_matrix(k, chi).entries;
  const MatrixXd c = gram_matrix(k, d).entries;
  MatrixXd t(K * K, K * K);
  for (int l = 0; l < K; ++l)
    for (int lp = 0; lp < K; ++lp) {
      const MatrixXd x = (wg.row(l).transpose() * wg.row(lp)).cwiseProduct(c);
      const MatrixXd block = g.transpose() * x * g;
      for (int r = 0; r < K; ++r)
        for (int rp = 0; rp < K; ++rp) t(l * K + lp, r * K + rp) = block(r, rp);
    }
  return {d, chi, k, 2, t};
}

HaarComparison ipr_obc_contract(const EnsembleParams& p) {
  p.validate();
  if (p.boundary != Boundary::OBC || p.geometry != Geometry::Chain)
    throw InvalidArgument("ipr_obc_contract needs an OBC chain");
  const std::vector<int> bonds = generation_bonds(p.N, p.d, p.chi);
  const int K = SymmetricGroup::get(p.k).order();
  VectorXd c = VectorXd::Unit(K, 0);
  double log_scale = 0.0;
  for (int i = 0; i < p.N; ++i) {
    c = site_map(p.k, bonds[i], p.d * bonds[i + 1]) * c;
    rescale(c, log_scale);
  }
  const double log_value = p.log_dim() + log_scale + sum_positive(c.sum(), "IPR contraction");
  return compare_ipr(log_value, p.log_dim(), p.k);
}

HaarComparison ipr_pbc_contract(const EnsembleParams& p) {
  p.validate();
  if (p.boundary != Boundary::PBC || p.geometry != Geometry::Chain)
    throw InvalidArgument("ipr_pbc_contract needs a PBC chain");
  const MatrixXd t = ipr_transfer(p.d, p.chi, p.k).entries;
  MatrixXd power = MatrixXd::Identity(t.rows(), t.cols());
  MatrixXd base = t;
  double log_power = 0.0;
  double log_base = 0.0;
  for (int e = p.N; e > 0; e >>= 1) {
    if (e & 1) {
      power = power * base;
      log_power += log_base;
      rescale(power, log_power);
    }
    if (e > 1) {
      base = base * base;
      log_base *= 2.0;
      rescale(base, log_base);
    }
  }
  const double log_value = p.log_dim() + log_power + sum_positive(power.trace(), "PBC trace");
  return compare_ipr(log_value, p.log_dim(), p.k);
}

HaarComparison fp_contract(const EnsembleParams& p) {
  p.validate();
  if (p.boundary != Boundary::OBC || p.geometry != Geometry::Chain)
    throw InvalidArgument("fp_contract needs an OBC chain");
  const std::vector<int> bonds = generation_bonds(p.N, p.d, p.chi);
  const int K = SymmetricGroup::get(p.k).order();
  // Physical replicas of the two layers meet through tr(P_sigma^dagger P_sigma').
  const MatrixXd coupling = gram_matrix(p.k, p.d).entries;
  MatrixXd m = MatrixXd::Zero(K, K);
  m(0, 0) = 1.0;
  double log_scale = 0.0;
  std::map<std::pair<int, int>, MatrixXd> cache;
  for (int i = 0; i < p.N; ++i) {
    const auto key = std::pair{bonds[i], p.d * bonds[i + 1]};
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, site_map(p.k, key.first, key.second)).first;
    const MatrixXd& r = it->second;
    m = (r * m * r.transpose()).cwiseProduct(coupling);
    rescale(m, log_scale);
  }
  const double log_value = log_scale + sum_positive(m.sum(), "frame-potential contraction");
  const LogValue haar = haar_fp_log_dim(p.log_dim(), p.k);
  return {LogValue{log_value}, haar, std::expm1(log_value - haar.log_value)};
}

HaarComparison layout_ipr(const IsometricLayout& layout, int k, double budget_mb) {
  const int K = SymmetricGroup::get(k).order();
  const int width = layout.width();
  const double entries = std::pow(static_cast<double>(K), width + 1);
  check_budget(2.0 * entries, budget_mb, "replica boundary vector");
  const long long size = int_pow(K, width + 1);
  const long long tail = size / K;

  std::map<std::tuple<int, int, int, int>, MatrixXd> cache;
  VectorXd v = VectorXd::Unit(size, 0);
  VectorXd next(size);
  double log_scale = 0.0;
  for (const SiteLayout& site : layout.all_sites()) {
    if (site.x == 0) {
      // Close the right edge of the finished row and open a fresh left edge.
      VectorXd closed = VectorXd::Zero(tail);
      for (long long i = 0; i < size; ++i) closed(i / K) += v(i);
      v.setZero();
      v.head(tail) = closed;
    }
    const auto key = std::tuple{site.left, site.down, site.right, site.up};
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, peps_site_tensor(k, site, layout.d())).first;
    const MatrixXd& m = it->second;

    const long long pre = int_pow(K, site.x);
    const long long post = int_pow(K, width - site.x - 1);
    next.setZero();
    for (long long p = 0; p < pre; ++p) {
      using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
      Eigen::Map<const RowMajor> src(v.data() + p * K * K * post, K * K, post);
      Eigen::Map<RowMajor> dst(next.data() + p * K * K * post, K * K, post);
      const RowMajor y = m * src;
      for (int s = 0; s < K; ++s) dst.row(s * K + s) = y.row(s);
    }
    v.swap(next);
    rescale(v, log_scale);
  }
  const double log_dim = layout.sites() * std::log(static_cast<double>(layout.d()));
  const double log_value = log_dim + log_scale + sum_positive(v.sum(), "PEPS contraction");
  return compare_ipr(log_value, log_dim, k);
}

HaarComparison peps_ipr(int L, int d, int chi, int k, double budget_mb) {
  if (L < 2) throw InvalidArgument("peps_ipr needs L >= 2");
  return layout_ipr(IsometricLayout::square(L, d, chi), k, budget_mb);
}

FitResult fit_fp_constant(const std::vector<FitPoint>& grid) {
  std::vector<double> y;
  std::vector<double> c;
  std::set<int> chis;
  std::set<int> sizes;
  FitResult fit;
  for (const FitPoint& point : grid) {
    if (point.k < 2) {
      ++fit.rows_rejected;
      continue;
    }
    if (point.N < 1 || point.chi < 1 || !(point.delta > -1.0))
      throw InvalidArgument("fit row has invalid N, chi or delta");
    y.push_back(std::log1p(point.delta) / point.N);
    c.push_back(0.5 * point.k * (point.k - 1) / (static_cast<double>(point.chi) * point.chi));
    chis.insert(point.chi);
    sizes.insert(point.N);
  }
  if (y.size() < 6 || chis.size() < 2 || sizes.size() < 2)
    throw InvalidArgument("degenerate fit grid: need >= 6 rows with k >= 2 spanning 2 chi and 2 N");

  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    num += c[i] * y[i];
    den += c[i] * c[i];
  }
  double a = std::max(num / den, 1e-12);
  for (int iter = 0; iter < 200; ++iter) {
    double grad = 0.0;
    double hess = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double f = std::log1p(a * c[i]);
      const double df = c[i] / (1.0 + a * c[i]);
      grad += df * (y[i] - f);
      hess += df * df;
    }
    const double step = grad / hess;
    a = std::max(a + step, 0.5 * a);
    if (std::abs(step) <= 1e-15 * std::abs(a)) break;
  }
  fit.a = a;
  fit.points_used = static_cast<int>(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double f = std::log1p(a * c[i]);
    fit.max_relative_residual = std::max(fit.max_relative_residual, std::abs(f - y[i]) / std::abs(y[i]));
  }
  return fit;
}

void write_contraction_csv_header(std::ostream& out) {
  out << "geometry,size,d,chi,k,quantity,value_log,delta_vs_haar\n";
}

void write_contraction_csv_row(std::ostream& out, Geometry geometry, int size, int d, int chi, int k,
                               const std::string& quantity, const HaarComparison& value) {
  const auto precision = out.precision(17);
  out << to_string(geometry) << ',' << size << ',' << d << ',' << chi << ',' << k << ',' << quantity
      << ',' << value.value.log_value << ',' << value.delta_vs_haar << '\n';
  out.precision(precision);
}

void write_fit(std::ostream& out, const FitResult& fit) {
  const auto precision = out.precision(17);
  out << "a=" << fit.a << '\n'
      << "max_relative_residual=" << fit.max_relative_residual << '\n'
      << "points_used=" << fit.points_used << '\n'
      << "rows_rejected=" << fit.rows_rejected << '\n';
  out.precision(precision);
}

}  // namespace rtn
