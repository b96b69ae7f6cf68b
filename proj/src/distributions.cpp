#include "rtn/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>

#include "rtn/closed_form.hpp"
#include "rtn/errors.hpp"

namespace rtn {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNegligible = 1e-14;

struct Window {
  double lo;
  double hi;
  double peak;
};

// Extends [lo, hi] until |g| at both ends is below kNegligible of the peak,
// never crossing [hard_lo, hard_hi].
Window find_window(const std::function<double(double)>& g, double lo, double hi,
                   double hard_lo = -kInf, double hard_hi = kInf) {
  lo = std::max(lo, hard_lo);
  hi = std::min(hi, hard_hi);
  for (int iter = 0; iter < 200; ++iter) {
    constexpr int kProbe = 256;
    double peak = 0.0;
    for (int i = 0; i <= kProbe; ++i) peak = std::max(peak, std::abs(g(lo + (hi - lo) * i / kProbe)));
    if (peak == 0.0) return {lo, hi, 0.0};
    const double step = 0.5 * (hi - lo);
    bool grew = false;
    if (lo > hard_lo && std::abs(g(lo)) > kNegligible * peak) {
      lo = std::max(lo - step, hard_lo);
      grew = true;
    }
    if (hi < hard_hi && std::abs(g(hi)) > kNegligible * peak) {
      hi = std::min(hi + step, hard_hi);
      grew = true;
    }
    if (!grew) return {lo, hi, peak};
  }
  throw AccuracyError("integration window did not close", 1.0);
}

double scaling_pt_pdf(double gamma, double w, const QuadratureConfig& cfg) {
  const double s = 1.0 / std::sqrt(gamma);
  const double shift = 1.5 / gamma;
  if (w == 0.0) return std::exp(1.0 / gamma);
  auto integrand = [&](double u) {
    return std::exp(-0.5 * u * u + 1.0 / gamma - w * std::exp(u * s + shift)) /
           std::sqrt(2.0 * std::numbers::pi);
  };
  if (cfg.scheme == QuadratureScheme::GaussHermite) {
    // E_u[f(u)] for standard normal u is sum_i w_i f(sqrt2 x_i) / sqrt(pi).
    const HermiteRule& rule = gauss_hermite(cfg.hermite_nodes);
    double total = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double u = std::numbers::sqrt2 * rule.nodes[i];
      total += rule.weights[i] * std::exp(1.0 / gamma - w * std::exp(u * s + shift));
    }
    return total / std::sqrt(std::numbers::pi);
  }
  const Window win = find_window(integrand, cfg.u_min, cfg.u_max);
  if (win.peak == 0.0) return 0.0;
  return adaptive_simpson(integrand, win.lo, win.hi, cfg.rel_tol, cfg.max_depth).value;
}

// Initial window in t = log w and the hard upper bound of the support.
std::pair<double, double> initial_log_window(const DistributionSpec& spec) {
  return std::visit(
      Overloaded{
          [](const PorterThomas& p) {
            return std::pair{-40.0, p.dim ? std::min(4.0, std::log(*p.dim)) : 4.0};
          },
          [](const ScalingPT& p) { return std::pair{-40.0, 4.0 + 12.0 / std::sqrt(p.gamma)}; },
          [](const RPSExactD2& p) {
            const double top = p.N * std::numbers::ln2;
            return std::pair{top - (p.N + 12.0 * std::sqrt(p.N) + 30.0), top};
          },
          [](const RPSLognormal& p) {
            const auto [mu, sigma2] = rps_lognormal_params(p.d);
            const double width = 14.0 * std::sqrt(p.N * sigma2);
            return std::pair{p.N * mu - width, p.N * mu + width};
          },
      },
      spec);
}

double log_support_max(const DistributionSpec& spec) {
  const double top = support_max(spec);
  return std::isinf(top) ? kInf : std::log(top);
}

double raw_moment(const DistributionSpec& spec, int k, const QuadratureConfig& cfg) {
  validate(spec);
  cfg.validate();
  // Bounded supports: the density is 0 exactly at the top, so evaluate just
  // below it to get the one-sided limit at the endpoint node.
  const double top = support_max(spec);
  const double below_top = std::isinf(top) ? kInf : std::nextafter(top, 0.0);
  auto g = [&](double t) {
    const double w = std::min(std::exp(t), below_top);
    const double density = pdf(spec, w, cfg);
    return density == 0.0 ? 0.0 : std::exp((k + 1) * t + std::log(density));
  };
  const auto [lo, hi] = initial_log_window(spec);
  const Window win = find_window(g, lo, hi, -kInf, log_support_max(spec));
  if (win.peak == 0.0) return 0.0;
  return romberg(g, win.lo, win.hi, std::max(cfg.rel_tol, 1e-11)).value;
}

double rps_exact_cdf(int N, double w) {
  const double log_dim = N * std::numbers::ln2;
  if (w <= 0.0) return 0.0;
  const double x = log_dim - std::log(w);
  if (x <= 0.0) return 1.0;
  double total = 0.0;
  for (int j = 0; j < N; ++j) total += std::exp(-x + j * std::log(x) - std::lgamma(j + 1.0));
  return std::min(total, 1.0);
}

double log_factorial(int k) { return std::lgamma(k + 1.0); }

struct CachedScalingTable {
  std::once_flag once;
  std::unique_ptr<CdfTable> table;
};

const CdfTable& scaling_table(double gamma, const QuadratureConfig& cfg) {
  static std::mutex mutex;
  static std::map<std::pair<double, int>, std::shared_ptr<CachedScalingTable>> cache;
  std::shared_ptr<CachedScalingTable> entry;
  {
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[{gamma, static_cast<int>(cfg.scheme)}];
    if (!slot) slot = std::make_shared<CachedScalingTable>();
    entry = slot;
  }
  std::call_once(entry->once,
                 [&] { entry->table = std::make_unique<CdfTable>(ScalingPT{gamma}, cfg); });
  return *entry->table;
}

std::function<double(double)> cdf_function(const DistributionSpec& spec,
                                           const QuadratureConfig& cfg) {
  if (const auto* s = std::get_if<ScalingPT>(&spec)) {
    const CdfTable* table = &scaling_table(s->gamma, cfg);
    return [table](double w) { return (*table)(w); };
  }
  return [spec, cfg](double w) { return cdf(spec, w, cfg); };
}

}  // namespace

void validate(const DistributionSpec& spec) {
  std::visit(Overloaded{
                 [](const PorterThomas& p) {
                   if (p.dim && !(*p.dim >= 2.0))
                     throw InvalidArgument("Porter-Thomas dimension must be >= 2");
                 },
                 [](const ScalingPT& p) {
                   if (!(p.gamma > 0.0)) throw InvalidArgument("gamma must be positive");
                 },
                 [](const RPSExactD2& p) {
                   if (p.N < 1) throw InvalidArgument("N must be positive");
                 },
                 [](const RPSLognormal& p) {
                   if (p.N < 1 || p.d < 2) throw InvalidArgument("need N >= 1 and d >= 2");
                 },
             },
             spec);
}

std::string describe(const DistributionSpec& spec) {
  std::ostringstream out;
  out.precision(10);
  std::visit(Overloaded{
                 [&](const PorterThomas& p) {
                   if (p.dim)
                     out << "porter_thomas(D=" << *p.dim << ")";
                   else
                     out << "porter_thomas";
                 },
                 [&](const ScalingPT& p) { out << "scaling_pt(gamma=" << p.gamma << ")"; },
                 [&](const RPSExactD2& p) { out << "rps_exact_d2(N=" << p.N << ")"; },
                 [&](const RPSLognormal& p) {
                   out << "rps_lognormal(N=" << p.N << ",d=" << p.d << ")";
                 },
             },
             spec);
  return out.str();
}

double support_max(const DistributionSpec& spec) {
  if (const auto* p = std::get_if<PorterThomas>(&spec)) return p->dim ? *p->dim : kInf;
  if (const auto* p = std::get_if<RPSExactD2>(&spec)) return std::ldexp(1.0, p->N);
  return kInf;
}

double pdf(const DistributionSpec& spec, double w, const QuadratureConfig& cfg) {
  validate(spec);
  if (w < 0.0 || w >= support_max(spec)) return 0.0;
  return std::visit(
      Overloaded{
          [&](const PorterThomas& p) {
            if (!p.dim) return std::exp(-w);
            const double D = *p.dim;
            return (D - 1.0) / D * std::exp((D - 2.0) * std::log1p(-w / D));
          },
          [&](const ScalingPT& p) { return scaling_pt_pdf(p.gamma, w, cfg); },
          [&](const RPSExactD2& p) {
            if (w == 0.0) return kInf;
            const double log_dim = p.N * std::numbers::ln2;
            const double x = log_dim - std::log(w);
            if (p.N == 1) return std::exp(-log_dim);
            return std::exp(-log_dim + (p.N - 1) * std::log(x) - log_factorial(p.N - 1));
          },
          [&](const RPSLognormal& p) {
            if (w == 0.0) return 0.0;
            const auto [mu, sigma2] = rps_lognormal_params(p.d);
            const double m = p.N * mu;
            const double v = p.N * sigma2;
            const double z = std::log(w) - m;
            return std::exp(-0.5 * z * z / v) / (w * std::sqrt(2.0 * std::numbers::pi * v));
          },
      },
      spec);
}

MomentResult moment(const DistributionSpec& spec, int k, const QuadratureConfig& cfg) {
  if (k < 1) throw InvalidArgument("moment order must be positive");
  MomentResult result{raw_moment(spec, k, cfg), std::nullopt};
  if (const auto* s = std::get_if<ScalingPT>(&spec))
    result.closed_form = std::exp(log_factorial(k) + 0.5 * k * (k - 1) / s->gamma);
  return result;
}

double normalization(const DistributionSpec& spec, const QuadratureConfig& cfg) {
  return raw_moment(spec, 0, cfg);
}

double cdf(const DistributionSpec& spec, double w, const QuadratureConfig& cfg) {
  validate(spec);
  if (w <= 0.0) return 0.0;
  return std::visit(
      Overloaded{
          [&](const PorterThomas& p) {
            if (!p.dim) return -std::expm1(-w);
            const double D = *p.dim;
            if (w >= D) return 1.0;
            return -std::expm1((D - 1.0) * std::log1p(-w / D));
          },
          [&](const ScalingPT& p) { return scaling_table(p.gamma, cfg)(w); },
          [&](const RPSExactD2& p) { return rps_exact_cdf(p.N, w); },
          [&](const RPSLognormal& p) {
            const auto [mu, sigma2] = rps_lognormal_params(p.d);
            const double z = (std::log(w) - p.N * mu) / std::sqrt(2.0 * p.N * sigma2);
            return 0.5 * std::erfc(-z);
          },
      },
      spec);
}

CdfTable::CdfTable(const DistributionSpec& spec, const QuadratureConfig& cfg, int points) {
  validate(spec);
  if (points < 16) throw InvalidArgument("CDF table needs at least 16 points");
  auto density = [&](double w) { return pdf(spec, w, cfg); };
  auto g = [&](double t) {
    const double value = density(std::exp(t));
    return std::isinf(value) ? 0.0 : std::exp(t) * value;
  };
  const auto [lo, hi] = initial_log_window(spec);
  const Window win = find_window(g, std::max(lo, -10.0), hi, -kInf, log_support_max(spec));
  const double w_min = 1e-6;
  const double w_max = std::max(std::exp(win.hi), 10.0 * w_min);
  grid_ = log_grid(w_min, std::min(w_max, support_max(spec)), points);
  values_.resize(grid_.size());
  auto simpson = [&](double a, double b, double fa, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * density(0.5 * (a + b)) + fb);
  };
  double f_prev = density(grid_[0]);
  const double f_zero = density(0.0);
  values_[0] = std::isinf(f_zero) ? 0.0 : simpson(0.0, grid_[0], f_zero, f_prev);
  for (std::size_t i = 1; i < grid_.size(); ++i) {
    const double f_next = density(grid_[i]);
    values_[i] = values_[i - 1] + simpson(grid_[i - 1], grid_[i], f_prev, f_next);
    f_prev = f_next;
  }
}

double CdfTable::operator()(double w) const {
  if (w <= 0.0) return 0.0;
  if (w <= grid_.front()) return values_.front() * w / grid_.front();
  if (w >= grid_.back()) return values_.back();
  const auto it = std::upper_bound(grid_.begin(), grid_.end(), w);
  const std::size_t i = static_cast<std::size_t>(it - grid_.begin());
  const double x = (w - grid_[i - 1]) / (grid_[i] - grid_[i - 1]);
  return values_[i - 1] + x * (values_[i] - values_[i - 1]);
}

double ks_distance(std::vector<double> samples, const DistributionSpec& spec,
                   const QuadratureConfig& cfg) {
  if (samples.empty()) throw InvalidArgument("ks_distance needs samples");
  if (samples.size() < 100) throw InvalidArgument("ks_distance needs at least 100 samples");
  validate(spec);
  std::sort(samples.begin(), samples.end());
  const auto F = cdf_function(spec, cfg);
  const double n = static_cast<double>(samples.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = F(samples[i]);
    worst = std::max({worst, f - i / n, (i + 1) / n - f});
  }
  return worst;
}

double ks_distance(const DistributionSpec& a, const DistributionSpec& b,
                   const QuadratureConfig& cfg) {
  validate(a);
  validate(b);
  const auto [a_lo, a_hi] = initial_log_window(a);
  const auto [b_lo, b_hi] = initial_log_window(b);
  const double lo = std::min(a_lo, b_lo);
  const double hi = std::max(a_hi, b_hi);
  const auto Fa = cdf_function(a, cfg);
  const auto Fb = cdf_function(b, cfg);
  constexpr int kPoints = 20000;
  double worst = 0.0;
  for (int i = 0; i <= kPoints; ++i) {
    const double w = std::exp(lo + (hi - lo) * i / kPoints);
    worst = std::max(worst, std::abs(Fa(w) - Fb(w)));
  }
  return worst;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw InvalidArgument("log_grid needs 0 < lo < hi, n >= 2");
  std::vector<double> grid(n);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < n; ++i) grid[i] = std::exp(a + (b - a) * i / (n - 1));
  grid.back() = hi;
  return grid;
}

void write_density_csv(std::ostream& out, const DistributionSpec& spec,
                       const std::vector<double>& grid, const QuadratureConfig& cfg) {
  out << "w,pdf\n";
  out.precision(17);
  for (double w : grid) out << w << ',' << pdf(spec, w, cfg) << '\n';
}

}  // namespace rtn
