#include "rtn/lattice.hpp"

#include <algorithm>
#include <cstdlib>

#include "rtn/errors.hpp"

namespace rtn {

IsometricLayout::IsometricLayout(int width, int height, int d, int chi)
    : width_(width), height_(height), d_(d), chi_(chi), sites_(width * height) {
  if (width < 1 || height < 1) throw InvalidArgument("lattice dimensions must be positive");
  if (d < 2) throw InvalidArgument("local dimension d must be >= 2");
  if (chi < 1) throw InvalidArgument("bond dimension must be positive");
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      sites_[y * width + x].x = x;
      sites_[y * width + x].y = y;
    }

  for (int index = sites() - 1; index >= 0; --index) {
    SiteLayout& s = sites_[index];
    const long long cap = static_cast<long long>(d) * s.right * s.up;
    const int max_left = s.x > 0 ? chi : 1;
    const int max_down = s.y > 0 ? chi : 1;
    int best_left = 1;
    int best_down = 1;
    for (int l = 1; l <= max_left; ++l)
      for (int b = 1; b <= max_down; ++b) {
        const long long product = static_cast<long long>(l) * b;
        if (product > cap) break;
        const long long best = static_cast<long long>(best_left) * best_down;
        const bool larger = product > best;
        const bool balanced = product == best && std::abs(l - b) < std::abs(best_left - best_down);
        const bool tie = product == best && std::abs(l - b) == std::abs(best_left - best_down) &&
                         l > best_left;
        if (larger || balanced || tie) {
          best_left = l;
          best_down = b;
        }
      }
    s.left = best_left;
    s.down = best_down;
    if (s.x > 0) sites_[index - 1].right = best_left;
    if (s.y > 0) sites_[index - width].up = best_down;
  }
}

std::vector<int> generation_bonds(int N, int d, int chi) {
  const IsometricLayout layout = IsometricLayout::chain(N, d, chi);
  std::vector<int> bonds(N + 1, 1);
  for (int i = 0; i < N; ++i) bonds[i + 1] = layout.site(i).right;
  return bonds;
}

std::vector<int> canonical_bonds(int N, int d, int chi) {
  std::vector<int> bonds = generation_bonds(N, d, chi);
  long long from_left = 1;
  for (int i = 1; i < N; ++i) {
    from_left = std::min<long long>(from_left * d, chi);
    bonds[i] = static_cast<int>(std::min<long long>(bonds[i], from_left));
  }
  return bonds;
}

}  // namespace rtn
