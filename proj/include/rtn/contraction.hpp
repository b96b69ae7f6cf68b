#pragma once

// Exact contraction of replica-averaged networks. Every Haar unitary is
// replaced by its k-fold average, leaving a network whose bonds carry S_k
// labels; the networks are contracted densely over those labels.

#include <iosfwd>
#include <string>
#include <vector>

#include "rtn/closed_form.hpp"
#include "rtn/ensemble.hpp"
#include "rtn/lattice.hpp"
#include "rtn/types.hpp"

namespace rtn {

/// Dense operator on (k!)^rails replica labels.
struct TransferOperator {
  int d = 2;
  int chi = 1;
  int k = 1;
  int rails = 1;
  MatrixXd entries;
};

/// Wg(d chi) G(chi). Throws RegimeError when d chi < k.
TransferOperator ipr_transfer(int d, int chi, int k);

/// Two-rail frame-potential operator,
/// T[(l,l'),(r,r')] = sum_{m,m'} Wg_{lm} Wg_{l'm'} G_{mm'}(d) G_{mr}(chi) G_{m'r'}(chi).
/// Row and column index (l, l') is l * k! + l'. Throws BudgetError above `budget_mb`.
TransferOperator fp_transfer(int d, int chi, int k, double budget_mb = 1024.0);

/// D E|<0|psi>|^{2k} for the OBC staircase, site unitaries averaged at their
/// actual sizes.
HaarComparison ipr_obc_contract(const EnsembleParams& p);
/// D tr(T^N) with T = ipr_transfer(d, chi, k).
HaarComparison ipr_pbc_contract(const EnsembleParams& p);
/// Frame potential of the OBC staircase; delta_vs_haar is F / F_Haar - 1.
HaarComparison fp_contract(const EnsembleParams& p);

/// D E|<0|psi>|^{2k} for an isometric layout, by bottom-to-top row sweeps of a
/// dense boundary vector over (k!)^(width + 1) labels.
HaarComparison layout_ipr(const IsometricLayout& layout, int k, double budget_mb = 1024.0);
/// Square PEPS of side L.
HaarComparison peps_ipr(int L, int d, int chi, int k, double budget_mb = 1024.0);

struct FitPoint {
  int N = 1;
  int chi = 1;
  int k = 1;
  double delta = 0.0;
};

struct FitResult {
  double a = 0.0;
  /// max |model - data| / |data| over the rows used.
  double max_relative_residual = 0.0;
  int points_used = 0;
  int rows_rejected = 0;
};

/// Least squares of log(1 + delta) / N against log(1 + a k(k-1) / (2 chi^2)).
/// Rows with k = 1 are rejected. Throws InvalidArgument unless at least six
/// rows remain spanning two values of chi and two of N.
FitResult fit_fp_constant(const std::vector<FitPoint>& grid);

/// CSV "geometry,size,d,chi,k,quantity,value_log,delta_vs_haar".
void write_contraction_csv_header(std::ostream& out);
void write_contraction_csv_row(std::ostream& out, Geometry geometry, int size, int d, int chi, int k,
                               const std::string& quantity, const HaarComparison& value);
/// Key-value lines "a=...", "max_relative_residual=...", ...
void write_fit(std::ostream& out, const FitResult& fit);

}  // namespace rtn
