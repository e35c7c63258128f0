#pragma once

#include <vector>

namespace slm {

// Alive paths grouped into equal-mass bins: bin b holds
// order[start[b]] .. order[start[b+1]-1]. Bins never split tied coordinates,
// so the fitted conditional expectation is a function of the state.
struct Partition {
  std::vector<int> order;
  std::vector<int> start;

  int n_bins() const { return int(start.size()) - 1; }
  int size(int b) const { return start[b + 1] - start[b]; }
};

// Recursive equal-mass split, one coordinate at a time, with about
// target_bins^(1/d) groups per coordinate. The effective bin count is
// reduced so that bins hold at least min_per_bin paths where possible.
// coords[i][p] is coordinate i of path p.
Partition equal_mass_partition(const std::vector<int>& members,
                               const std::vector<const double*>& coords, int target_bins,
                               int min_per_bin);

}  // namespace slm
