#include <doctest.h>

#include <cmath>

#include "rtn/closed_form.hpp"
#include "rtn/errors.hpp"

using namespace rtn;

namespace {

double rel(double a, double b) { return std::abs(a / b - 1.0); }

}  // namespace

TEST_CASE("haar_ipr examples") {
  for (int d : {2, 3})
    for (int N : {1, 5, 64}) CHECK(haar_ipr(d, N, 1).log_value == 0.0);
  CHECK(haar_ipr(2, 1, 2).value() == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(haar_ipr(2, 3, 2).value() == doctest::Approx(2.0 / 9.0).epsilon(1e-14));
  // D^(k-1) I_Haar -> k! as D grows.
  CHECK(std::exp(haar_ipr(2, 200, 3).log_value + 2 * 200 * std::log(2.0)) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("haar_fp examples") {
  CHECK(haar_fp(2, 3, 1).value() == doctest::Approx(1.0 / 8.0).epsilon(1e-14));
  CHECK(haar_fp(2, 1, 2).value() == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  for (int d : {2, 3})
    for (int N = 1; N <= 12; ++N)
      for (int k = 1; k <= 4; ++k) {
        const double log_dim = N * std::log(double(d));
        CHECK(std::abs(log_dim + haar_fp(d, N, k).log_value - haar_ipr(d, N, k).log_value) < 1e-12);
      }
}

TEST_CASE("haar values survive D beyond the double range") {
  const LogValue v = haar_fp(2, 2000, 2);
  CHECK(!v.representable());
  CHECK(std::isfinite(v.log_value));
  CHECK(v.log_value == doctest::Approx(std::log(2.0) - 2 * 2000 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("rmps_ipr_obc examples") {
  CHECK(rmps_ipr_obc(EnsembleParams::chain(3, 2, 2, 2)).value() == doctest::Approx(0.24).epsilon(1e-14));
  for (int N : {3, 8, 20})
    for (int chi : {1, 2, 4})
      CHECK(std::abs(rmps_ipr_obc(EnsembleParams::chain(N, 2, chi, 1)).log_value) < 1e-14);
}

TEST_CASE("rmps_ipr_obc domain") {
  CHECK_THROWS_AS(rmps_ipr_obc(EnsembleParams::chain(3, 2, 8, 2)), DomainError);
  CHECK_THROWS_AS(rmps_ipr_obc(EnsembleParams::chain(8, 2, 3, 2)), DomainError);
  const double continued =
      rmps_ipr_obc(EnsembleParams::chain(8, 2, 3, 2), ClosedFormOptions{true}).value();
  const double lo = rmps_ipr_obc(EnsembleParams::chain(8, 2, 2, 2)).value();
  const double hi = rmps_ipr_obc(EnsembleParams::chain(8, 2, 4, 2)).value();
  CHECK(continued < lo);
  CHECK(continued > hi);
}

TEST_CASE("rmps_ipr_obc reaches the Haar value at chi = d^(N-1)") {
  for (int d : {2, 3})
    for (int N = 1; N <= 6; ++N)
      for (int k = 1; k <= 4; ++k) {
        const int chi = static_cast<int>(std::lround(std::pow(d, N - 1)));
        const EnsembleParams p = EnsembleParams::chain(N, d, chi, k);
        CHECK(rel(rmps_ipr_obc(p).value(), haar_ipr(d, N, k).value()) < 1e-12);
        CHECK(std::abs(rmps_ipr_obc_vs_haar(p).delta_vs_haar) < 1e-12);
      }
}

TEST_CASE("rmps_ipr_obc is non-increasing in chi") {
  for (int d : {2, 3})
    for (int k = 2; k <= 4; ++k) {
      const int N = d == 2 ? 16 : 10;
      double previous = INFINITY;
      for (int chi = 1; chi <= std::pow(d, N - 1); chi *= d) {
        const double v = rmps_ipr_obc(EnsembleParams::chain(N, d, chi, k)).log_value;
        CHECK(v <= previous + 1e-12);
        previous = v;
      }
    }
}

TEST_CASE("rmps_ipr_leading examples") {
  for (int chi : {2, 64})
    CHECK(rmps_ipr_leading(EnsembleParams::chain(10, 2, chi, 1)).log_value ==
          doctest::Approx(haar_ipr(2, 10, 1).log_value));
  const HaarComparison c = rmps_ipr_leading_vs_haar(EnsembleParams::chain(10, 2, 100, 2));
  CHECK(c.delta_vs_haar + 1.0 == doctest::Approx(std::pow(1.0 + 1.0 / 200.0, 10)).epsilon(1e-12));
  CHECK(c.delta_vs_haar + 1.0 == doctest::Approx(1.05114).epsilon(1e-5));
}

TEST_CASE("leading and exact forms agree to first order") {
  // Engineering bound: the exact form carries the exponent N - r - 1 instead of
  // N, which is an O((r + 1) k^2 / chi) relative correction.
  for (int N : {8, 16, 32})
    for (int r = 3; r < N - 1 && r <= 10; ++r)
      for (int k : {2, 3}) {
        const int chi = 1 << r;
        const EnsembleParams p = EnsembleParams::chain(N, 2, chi, k);
        const double gap = std::abs(rmps_ipr_leading(p).value() / rmps_ipr_obc(p).value() - 1.0);
        const double bound = 5.0 * ((r + 1.0) * k * k / chi + double(N) * k * k / (double(chi) * chi));
        CHECK(gap <= bound);
      }
}

TEST_CASE("scaling_ratio examples") {
  CHECK(scaling_ratio(0.7, 1) == 1.0);
  CHECK(scaling_ratio(1.0, 2) == doctest::Approx(2.718281828).epsilon(1e-9));
  CHECK(scaling_ratio(2.0, 3) == doctest::Approx(4.481689).epsilon(1e-6));
}

TEST_CASE("OBC IPR converges to the scaling limit") {
  for (double gamma : {1.0, 2.0})
    for (int k : {2, 3}) {
      double previous = INFINITY;
      for (int N : {8, 16, 32, 64}) {
        const int chi = static_cast<int>(N * gamma / 2.0);
        const double ratio = rmps_ipr_obc_vs_haar(EnsembleParams::chain(N, 2, chi, k)).delta_vs_haar + 1.0;
        const double gap = std::abs(ratio - scaling_ratio(gamma, k));
        CHECK(gap < previous);
        previous = gap;
      }
    }
}

TEST_CASE("rmps_ipr_pbc examples") {
  const EnsembleParams p = EnsembleParams::chain(3, 2, 2, 2, Boundary::PBC);
  const double expected = 8.0 * (std::pow(6.0 / 20.0, 3) + std::pow(2.0 / 12.0, 3));
  CHECK(rmps_ipr_pbc(p).value() == doctest::Approx(expected).epsilon(1e-14));
  CHECK(rmps_ipr_pbc(p).value() == doctest::Approx(0.253037).epsilon(1e-6));
  for (int chi : {1, 2, 5})
    CHECK(std::abs(rmps_ipr_pbc(EnsembleParams::chain(7, 3, chi, 1, Boundary::PBC)).log_value) < 1e-14);
}

TEST_CASE("rps_ipr examples") {
  CHECK(rps_ipr(5, 3, 1).log_value == doctest::Approx(0.0));
  CHECK(rps_ipr(2, 2, 2).value() == doctest::Approx(4.0 / 9.0).epsilon(1e-14));
  for (int N = 1; N <= 10; ++N)
    for (int k = 1; k <= 4; ++k)
      CHECK(rps_ipr(N, 2, k).value() == doctest::Approx(std::pow(2.0, N) * std::pow(k + 1.0, -N)).epsilon(1e-12));
}

TEST_CASE("chi = 1 triple point") {
  for (int d : {2, 3})
    for (int N = 1; N <= 10; ++N)
      for (int k = 1; k <= 4; ++k) {
        const double rps = rps_ipr(N, d, k).value();
        CHECK(rel(rmps_ipr_obc(EnsembleParams::chain(N, d, 1, k)).value(), rps) < 1e-12);
        CHECK(rel(rmps_ipr_pbc(EnsembleParams::chain(N, d, 1, k, Boundary::PBC)).value(), rps) < 1e-12);
      }
}

TEST_CASE("fp_scaling_model examples") {
  CHECK(fp_scaling_model(16, 4.0, 1, 0.6) == 1.0);
  CHECK(fp_scaling_model(16, 4.0, 2, 0.6) == doctest::Approx(std::pow(1.0375, 16)).epsilon(1e-14));
  CHECK(fp_scaling_model(16, 4.0, 2, 0.6) == doctest::Approx(1.8022).epsilon(1e-4));
}

TEST_CASE("rps_lognormal_params") {
  const auto [mu2, s2] = rps_lognormal_params(2);
  CHECK(mu2 == doctest::Approx(std::log(2.0) - 1.0).epsilon(1e-14));
  CHECK(s2 == doctest::Approx(1.0).epsilon(1e-14));
  const auto [mu3, s3] = rps_lognormal_params(3);
  CHECK(mu3 == doctest::Approx(-0.401388).epsilon(1e-6));
  CHECK(s3 == doctest::Approx(1.25).epsilon(1e-14));
  for (int d = 2; d <= 40; ++d) CHECK(rps_lognormal_params(d).second > 0.0);
  CHECK(harmonic_number(3) == doctest::Approx(11.0 / 6.0));
  CHECK(trigamma_integer(1) == doctest::Approx(M_PI * M_PI / 6.0));
}

TEST_CASE("ensemble parameter validation") {
  CHECK_THROWS_AS(EnsembleParams::chain(0, 2, 1, 1).validate(), InvalidArgument);
  CHECK_THROWS_AS(EnsembleParams::chain(4, 1, 1, 1).validate(), InvalidArgument);
  CHECK_THROWS_AS(EnsembleParams::chain(4, 2, 0, 1).validate(), InvalidArgument);
  CHECK_NOTHROW(EnsembleParams::square(3, 2, 2, 2).validate());
  int r = 0;
  CHECK(is_power_of(27, 3, &r));
  CHECK(r == 3);
  CHECK(!is_power_of(12, 2));
  CHECK(parse_boundary("pbc") == Boundary::PBC);
  CHECK(parse_geometry("square") == Geometry::Square);
}
