#pragma once

// Bond dimensions of the sequential isometric circuits that generate random
// MPS (a width x 1 strip) and random PEPS (a width x height grid). Sites are
// visited in row-major order, bottom row first, left to right. Each site takes
// its left and lower bonds as inputs and emits the physical leg plus its right
// and upper bonds through a Haar unitary of size d * right * up.

#include <vector>

#include "rtn/ensemble.hpp"

namespace rtn {

struct SiteLayout {
  int x = 0;
  int y = 0;
  int left = 1;   ///< input bond from (x-1, y)
  int down = 1;   ///< input bond from (x, y-1)
  int right = 1;  ///< output bond to (x+1, y)
  int up = 1;     ///< output bond to (x, y+1)

  int inputs() const { return left * down; }
  int unitary_size(int d) const { return d * right * up; }
};

class IsometricLayout {
 public:
  /// Bonds are chosen from the last site backwards: each site takes the largest
  /// left * down <= d * right * up with both factors <= chi (1 on lattice
  /// edges), ties broken towards balanced factors and then towards a larger
  /// left bond. For a strip this gives bond i = min(chi, d^(N-i)).
  IsometricLayout(int width, int height, int d, int chi);

  static IsometricLayout chain(int N, int d, int chi) { return {N, 1, d, chi}; }
  static IsometricLayout square(int L, int d, int chi) { return {L, L, d, chi}; }

  int width() const { return width_; }
  int height() const { return height_; }
  int d() const { return d_; }
  int chi() const { return chi_; }
  int sites() const { return width_ * height_; }

  /// Site in sequential order, index = y * width + x.
  const SiteLayout& site(int index) const { return sites_[index]; }
  const SiteLayout& site(int x, int y) const { return sites_[y * width_ + x]; }
  const std::vector<SiteLayout>& all_sites() const { return sites_; }

 private:
  int width_;
  int height_;
  int d_;
  int chi_;
  std::vector<SiteLayout> sites_;
};

/// Bond profile of a chain after generation, bonds[0] = bonds[N] = 1.
std::vector<int> generation_bonds(int N, int d, int chi);
/// Bond profile after left-to-right compression, min(d^i, chi, d^(N-i)).
std::vector<int> canonical_bonds(int N, int d, int chi);

}  // namespace rtn
