#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <string_view>

namespace rtn {

enum class Boundary { OBC, PBC };
enum class Geometry { Chain, Square };

std::string_view to_string(Boundary b);
std::string_view to_string(Geometry g);
Boundary parse_boundary(std::string_view text);
Geometry parse_geometry(std::string_view text);

/// One experiment point. For Square geometry N = L * L.
struct EnsembleParams {
  int N = 1;
  int d = 2;
  int chi = 1;
  int k = 1;
  Boundary boundary = Boundary::OBC;
  Geometry geometry = Geometry::Chain;
  int L = 0;

  static EnsembleParams chain(int N, int d, int chi, int k, Boundary b = Boundary::OBC) {
    return {N, d, chi, k, b, Geometry::Chain, 0};
  }
  static EnsembleParams square(int L, int d, int chi, int k) {
    return {L * L, d, chi, k, Boundary::OBC, Geometry::Square, L};
  }

  /// Throws InvalidArgument when an invariant is violated.
  void validate() const;

  /// log D = N log d; D itself may exceed the double range.
  double log_dim() const { return N * std::log(static_cast<double>(d)); }
  /// r = log_d chi, real valued.
  double log_d_chi() const { return std::log(static_cast<double>(chi)) / std::log(static_cast<double>(d)); }
};

/// True when chi = d^r for a non-negative integer r; writes r.
bool is_power_of(int chi, int d, int* exponent = nullptr);

}  // namespace rtn
