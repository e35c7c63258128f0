#include "slmlab/regression.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "slmlab/errors.hpp"

namespace slm {

namespace {

// Splits order[lo, hi) into at most `groups` runs of roughly equal size
// after sorting by `coord`. Cut points move forward past ties.
void split(std::vector<int>& order, int lo, int hi, const double* coord, int groups,
           std::vector<std::pair<double, int>>& scratch, std::vector<int>& cuts) {
  const int m = hi - lo;
  scratch.resize(std::size_t(m));
  for (int i = 0; i < m; ++i) scratch[std::size_t(i)] = {coord[order[std::size_t(lo + i)]], order[std::size_t(lo + i)]};
  std::sort(scratch.begin(), scratch.end());
  for (int i = 0; i < m; ++i) order[std::size_t(lo + i)] = scratch[std::size_t(i)].second;
  cuts.clear();
  cuts.push_back(lo);
  for (int g = 1; g < groups; ++g) {
    int c = lo + int((long long)m * g / groups);
    if (c <= cuts.back()) continue;
    while (c < hi && scratch[std::size_t(c - lo)].first == scratch[std::size_t(c - lo - 1)].first) ++c;
    if (c < hi && c > cuts.back()) cuts.push_back(c);
  }
  cuts.push_back(hi);
}

}  // namespace

Partition equal_mass_partition(const std::vector<int>& members,
                               const std::vector<const double*>& coords, int target_bins,
                               int min_per_bin) {
  if (coords.empty()) throw NumericalError("regression: no coordinates");
  if (target_bins < 1) throw NumericalError("regression: bin count must be positive");
  Partition part;
  part.order = members;
  const int m = int(members.size());
  if (m == 0) {
    part.start = {0};
    return part;
  }
  const int d = int(coords.size());
  const int bins = std::max(1, std::min(target_bins, m / std::max(1, min_per_bin)));
  const int per_dim = std::max(1, int(std::lround(std::pow(double(bins), 1.0 / d))));

  std::vector<std::pair<int, int>> ranges{{0, m}};
  std::vector<std::pair<double, int>> scratch;
  std::vector<int> cuts;
  for (int c = 0; c < d; ++c) {
    const int groups = (c == 0 && d == 1) ? bins : per_dim;
    std::vector<std::pair<int, int>> next;
    for (auto [lo, hi] : ranges) {
      split(part.order, lo, hi, coords[std::size_t(c)], groups, scratch, cuts);
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i) next.emplace_back(cuts[i], cuts[i + 1]);
    }
    ranges = std::move(next);
  }
  part.start.reserve(ranges.size() + 1);
  for (auto [lo, hi] : ranges) part.start.push_back(lo);
  part.start.push_back(m);
  return part;
}

}  // namespace slm
