#include "rtn/replica_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>

#include "rtn/errors.hpp"

namespace rtn {

Permutation::Permutation(std::vector<int> one_line) : image_(std::move(one_line)) {
  const int k = static_cast<int>(image_.size());
  std::vector<bool> seen(k + 1, false);
  for (int v : image_) {
    if (v < 1 || v > k || seen[v])
      throw InvalidArgument("permutation image is not a bijection on {1..k}");
    seen[v] = true;
  }
}

Permutation Permutation::identity(int k) {
  std::vector<int> image(k);
  std::iota(image.begin(), image.end(), 1);
  return Permutation(std::move(image));
}

Permutation Permutation::inverse() const {
  std::vector<int> inv(image_.size());
  for (std::size_t i = 0; i < image_.size(); ++i) inv[image_[i] - 1] = static_cast<int>(i) + 1;
  Permutation p;
  p.image_ = std::move(inv);
  return p;
}

Permutation operator*(const Permutation& a, const Permutation& b) {
  if (a.k() != b.k()) throw ShapeError("cannot compose permutations of different degree");
  std::vector<int> image(a.image_.size());
  for (std::size_t i = 0; i < image.size(); ++i) image[i] = a.image_[b.image_[i] - 1];
  Permutation p;
  p.image_ = std::move(image);
  return p;
}

std::string Permutation::cycle_notation() const {
  std::ostringstream out;
  std::vector<bool> visited(image_.size(), false);
  bool any = false;
  for (std::size_t start = 0; start < image_.size(); ++start) {
    if (visited[start] || image_[start] == static_cast<int>(start) + 1) continue;
    any = true;
    out << '(';
    std::size_t i = start;
    bool first = true;
    while (!visited[i]) {
      visited[i] = true;
      if (!first) out << ' ';
      out << i + 1;
      first = false;
      i = static_cast<std::size_t>(image_[i] - 1);
    }
    out << ')';
  }
  if (!any) out << "()";
  return out.str();
}

int cycle_count(const Permutation& sigma) {
  const auto& image = sigma.one_line();
  std::vector<bool> visited(image.size(), false);
  int cycles = 0;
  for (std::size_t start = 0; start < image.size(); ++start) {
    if (visited[start]) continue;
    ++cycles;
    for (std::size_t i = start; !visited[i]; i = static_cast<std::size_t>(image[i] - 1))
      visited[i] = true;
  }
  return cycles;
}

std::size_t lexicographic_rank(const Permutation& sigma) {
  const auto& image = sigma.one_line();
  const std::size_t k = image.size();
  std::size_t rank = 0;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t smaller_after = 0;
    for (std::size_t j = i + 1; j < k; ++j)
      if (image[j] < image[i]) ++smaller_after;
    rank = rank * (k - i) + smaller_after;
  }
  return rank;
}

std::vector<Permutation> enumerate_sym(int k, int k_max) {
  if (k < 1 || k > k_max)
    throw UnsupportedSizeError("replica count k=" + std::to_string(k) + " outside [1, " +
                               std::to_string(k_max) + "]");
  std::vector<int> image(k);
  std::iota(image.begin(), image.end(), 1);
  std::vector<Permutation> out;
  do {
    out.emplace_back(image);
  } while (std::next_permutation(image.begin(), image.end()));
  return out;
}

SymmetricGroup::SymmetricGroup(int k)
    : k_(k), elements_(enumerate_sym(k, std::max(k, kDefaultMaxReplicas))) {
  const int n = order();
  std::vector<Permutation> inverses;
  inverses.reserve(n);
  inverse_index_.resize(n);
  for (int a = 0; a < n; ++a) {
    inverses.push_back(elements_[a].inverse());
    inverse_index_[a] = static_cast<int>(lexicographic_rank(inverses.back()));
  }
  relative_cycles_.resize(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      const int c = cycle_count(inverses[a] * elements_[b]);
      relative_cycles_(a, b) = c;
      relative_cycles_(b, a) = c;
    }
  }
}

const SymmetricGroup& SymmetricGroup::get(int k, int k_max) {
  if (k < 1 || k > k_max)
    throw UnsupportedSizeError("replica count k=" + std::to_string(k) + " outside [1, " +
                               std::to_string(k_max) + "]");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<const SymmetricGroup>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[k];
  if (!slot) slot.reset(new SymmetricGroup(k));
  return *slot;
}

double rising_factorial(double q, int k) {
  double value = 1.0;
  for (int j = 0; j < k; ++j) value *= q + j;
  return value;
}

ReplicaMatrix gram_matrix(int k, int q) {
  if (q < 1) throw InvalidArgument("gram_matrix requires q >= 1");
  const SymmetricGroup& group = SymmetricGroup::get(k);
  if (std::pow(static_cast<double>(q), k) >= 9007199254740992.0) {
    std::clog << "rtn: warning: gram_matrix(k=" << k << ", q=" << q
              << ") entries exceed 2^53 and are no longer exact integers\n";
  }
  return {k, q, ReplicaKind::Gram, gram_entries<double>(group, static_cast<double>(q))};
}

ReplicaMatrix weingarten_matrix(int k, int q) {
  if (q < k)
    throw RegimeError("Weingarten matrix requires q >= k (got q=" + std::to_string(q) +
                      ", k=" + std::to_string(k) + ")");
  ReplicaMatrix gram = gram_matrix(k, q);
  const Eigen::LLT<MatrixXd> llt(gram.entries);
  MatrixXd inverse = llt.solve(MatrixXd::Identity(gram.entries.rows(), gram.entries.cols()));
  // Symmetrize away the rounding asymmetry of the triangular solves.
  MatrixXd symmetric = 0.5 * (inverse + inverse.transpose());
  return {k, q, ReplicaKind::Weingarten, std::move(symmetric)};
}

IntegerPartition::IntegerPartition(std::vector<int> parts) : parts_(std::move(parts)) {
  if (parts_.empty()) throw InvalidArgument("partition must have at least one part");
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    if (parts_[i] < 1) throw InvalidArgument("partition parts must be positive");
    if (i > 0 && parts_[i] > parts_[i - 1])
      throw InvalidArgument("partition parts must be non-increasing");
  }
  k_ = std::accumulate(parts_.begin(), parts_.end(), 0);
}

int IntegerPartition::column(int j) const {
  int length = 0;
  for (int part : parts_)
    if (part >= j) ++length;
  return length;
}

int IntegerPartition::hook_length(int i, int j) const {
  return (row(i) - j) + (column(j) - i) + 1;
}

std::vector<IntegerPartition> partitions(int k) {
  if (k < 1) throw InvalidArgument("partitions requires k >= 1");
  std::vector<IntegerPartition> out;
  std::vector<int> current{k};
  while (true) {
    out.emplace_back(current);
    // Next partition in reverse-lexicographic order.
    int ones = 0;
    while (!current.empty() && current.back() == 1) {
      current.pop_back();
      ++ones;
    }
    if (current.empty()) break;
    int part = --current.back();
    int remaining = ones + 1;
    while (remaining > part) {
      current.push_back(part);
      remaining -= part;
    }
    if (remaining > 0) current.push_back(remaining);
  }
  return out;
}

std::uint64_t hook_dimension(const IntegerPartition& lambda) {
  std::uint64_t numerator = 1;
  for (int i = 2; i <= lambda.k(); ++i) numerator *= static_cast<std::uint64_t>(i);
  std::uint64_t hooks = 1;
  for (int i = 1; i <= lambda.rows(); ++i)
    for (int j = 1; j <= lambda.row(i); ++j)
      hooks *= static_cast<std::uint64_t>(lambda.hook_length(i, j));
  return numerator / hooks;
}

void write_csv(std::ostream& out, const ReplicaMatrix& matrix) {
  const SymmetricGroup& group = SymmetricGroup::get(matrix.k, std::max(matrix.k, kDefaultMaxReplicas));
  const auto& elements = group.elements();
  out << "sigma";
  for (const auto& p : elements) out << ",\"" << p.cycle_notation() << '"';
  out << '\n';
  const auto precision = out.precision(17);
  for (int a = 0; a < matrix.entries.rows(); ++a) {
    out << '"' << elements[a].cycle_notation() << '"';
    for (int b = 0; b < matrix.entries.cols(); ++b) out << ',' << matrix.entries(a, b);
    out << '\n';
  }
  out.precision(precision);
}

}  // namespace rtn
