#pragma once

// Combinatorics of the symmetric group S_k used by every replica-averaged
// network: permutations in a frozen lexicographic order, Gram and Weingarten
// matrices over that order, and the partition data (hook dimensions, content
// polynomials) that diagonalizes them.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rtn/types.hpp"

namespace rtn {

/// Largest replica count accepted unless the caller passes an explicit override.
inline constexpr int kDefaultMaxReplicas = 6;

/// A permutation of {1..k} in one-line notation.
class Permutation {
 public:
  Permutation() = default;
  /// `one_line[i-1]` is the image of i; must be a bijection on {1..k}.
  explicit Permutation(std::vector<int> one_line);

  static Permutation identity(int k);

  int k() const { return static_cast<int>(image_.size()); }
  /// Image of i (1-based).
  int operator()(int i) const { return image_[i - 1]; }
  const std::vector<int>& one_line() const { return image_; }

  Permutation inverse() const;
  /// Composition, (a * b)(i) = a(b(i)).
  friend Permutation operator*(const Permutation& a, const Permutation& b);
  friend bool operator==(const Permutation&, const Permutation&) = default;

  /// Cycle notation with fixed points omitted, e.g. "(1 2)(3 4)"; identity is "()".
  std::string cycle_notation() const;

 private:
  std::vector<int> image_;
};

/// Number of disjoint cycles, fixed points included.
int cycle_count(const Permutation& sigma);

/// Position of `sigma` in the lexicographic enumeration of S_k.
std::size_t lexicographic_rank(const Permutation& sigma);

/// All k! permutations in lexicographic one-line order.
/// Throws UnsupportedSizeError when k is outside [1, k_max].
std::vector<Permutation> enumerate_sym(int k, int k_max = kDefaultMaxReplicas);

/// Cached S_k data shared by all replica matrices: the elements in canonical
/// order and the table #(sigma^-1 pi) for every ordered pair.
class SymmetricGroup {
 public:
  static const SymmetricGroup& get(int k, int k_max = kDefaultMaxReplicas);

  int k() const { return k_; }
  int order() const { return static_cast<int>(elements_.size()); }
  const std::vector<Permutation>& elements() const { return elements_; }
  /// cycles(a, b) = cycle_count(elements[a]^-1 * elements[b]).
  const Eigen::MatrixXi& relative_cycles() const { return relative_cycles_; }
  /// Index of sigma^-1 for each sigma.
  const std::vector<int>& inverse_index() const { return inverse_index_; }

 private:
  explicit SymmetricGroup(int k);
  int k_;
  std::vector<Permutation> elements_;
  Eigen::MatrixXi relative_cycles_;
  std::vector<int> inverse_index_;
};

/// Entries q^{#(sigma^-1 pi)} over the canonical order, for any scalar q.
template <typename Scalar>
Matrix<Scalar> gram_entries(const SymmetricGroup& group, Scalar q) {
  const Eigen::MatrixXi& cycles = group.relative_cycles();
  std::vector<Scalar> powers(group.k() + 1, Scalar(1));
  for (int c = 1; c <= group.k(); ++c) powers[c] = powers[c - 1] * q;
  return cycles.unaryExpr([&](int c) { return powers[c]; });
}

enum class ReplicaKind { Gram, Weingarten, Transfer };

/// k! x k! real matrix indexed by the canonical S_k order.
struct ReplicaMatrix {
  int k = 1;
  int q = 1;
  ReplicaKind kind = ReplicaKind::Gram;
  MatrixXd entries;
};

/// Gram matrix G_{sigma,pi}(q) = q^{#(sigma^-1 pi)}. Entries are exact integers
/// while q^k < 2^53; beyond that a warning is logged and values are rounded.
ReplicaMatrix gram_matrix(int k, int q);

/// Inverse of the Gram matrix. Throws RegimeError when q < k.
ReplicaMatrix weingarten_matrix(int k, int q);

/// prod_{j=0}^{k-1} (q + j), the common row sum of the Gram matrix.
double rising_factorial(double q, int k);

/// Integer partition with non-increasing positive parts.
class IntegerPartition {
 public:
  explicit IntegerPartition(std::vector<int> parts);

  int k() const { return k_; }
  const std::vector<int>& parts() const { return parts_; }
  int rows() const { return static_cast<int>(parts_.size()); }
  /// Length of row i (1-based).
  int row(int i) const { return parts_[i - 1]; }
  /// Length of column j (1-based), i.e. the conjugate partition.
  int column(int j) const;
  /// (row(i) - j) + (column(j) - i) + 1 for the cell (i, j), 1-based.
  int hook_length(int i, int j) const;

  friend bool operator==(const IntegerPartition&, const IntegerPartition&) = default;

 private:
  std::vector<int> parts_;
  int k_ = 0;
};

/// All partitions of k in reverse-lexicographic order: (k), (k-1,1), ..., (1^k).
std::vector<IntegerPartition> partitions(int k);

/// Number of standard Young tableaux, k! / prod of hook lengths.
std::uint64_t hook_dimension(const IntegerPartition& lambda);

/// prod over cells (i, j) of (q + j - i); c_(2)(q) = q(q+1), c_(1,1)(q) = q(q-1).
template <typename Scalar>
Scalar content_polynomial(const IntegerPartition& lambda, Scalar q) {
  Scalar value(1);
  for (int i = 1; i <= lambda.rows(); ++i)
    for (int j = 1; j <= lambda.row(i); ++j) value *= q + Scalar(j - i);
  return value;
}

/// CSV, row-major, first line holds the permutation labels in cycle notation.
void write_csv(std::ostream& out, const ReplicaMatrix& matrix);

}  // namespace rtn
