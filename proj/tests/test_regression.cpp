#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "slmlab/errors.hpp"
#include "slmlab/regression.hpp"

using namespace slm;

namespace {

std::vector<int> iota(int n) {
  std::vector<int> v(std::size_t(n), 0);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

void expect_is_partition(const Partition& p, const std::vector<int>& members) {
  ASSERT_EQ(p.start.front(), 0);
  ASSERT_EQ(p.start.back(), int(members.size()));
  for (int b = 0; b < p.n_bins(); ++b) EXPECT_GE(p.size(b), 0);
  std::vector<int> a = p.order, m = members;
  std::sort(a.begin(), a.end());
  std::sort(m.begin(), m.end());
  EXPECT_EQ(a, m);
}

}  // namespace

TEST(Partition, OneDimensionalBinsAreSortedAndBalanced) {
  std::mt19937 g(3);
  std::uniform_real_distribution<double> u;
  std::vector<double> x(1000);
  for (auto& v : x) v = u(g);
  const auto members = iota(1000);
  const auto p = equal_mass_partition(members, {x.data()}, 10, 5);
  expect_is_partition(p, members);
  ASSERT_EQ(p.n_bins(), 10);
  for (int b = 0; b < 10; ++b) EXPECT_EQ(p.size(b), 100);
  for (int b = 0; b + 1 < 10; ++b) {
    double hi = -1, lo = 2;
    for (int i = p.start[b]; i < p.start[b + 1]; ++i) hi = std::max(hi, x[p.order[i]]);
    for (int i = p.start[b + 1]; i < p.start[b + 2]; ++i) lo = std::min(lo, x[p.order[i]]);
    EXPECT_LT(hi, lo);
  }
}

TEST(Partition, TiesNeverStraddleBins) {
  // Three distinct values: a conditional expectation must be a function of x.
  std::vector<double> x(300);
  for (int i = 0; i < 300; ++i) x[i] = double(i % 3);
  const auto members = iota(300);
  const auto p = equal_mass_partition(members, {x.data()}, 10, 1);
  expect_is_partition(p, members);
  std::map<double, std::set<int>> bins_of;
  for (int b = 0; b < p.n_bins(); ++b)
    for (int i = p.start[b]; i < p.start[b + 1]; ++i) bins_of[x[p.order[i]]].insert(b);
  for (const auto& [v, bins] : bins_of) EXPECT_EQ(bins.size(), 1u) << "value " << v;
}

TEST(Partition, MinimumOccupancyReducesBinCount) {
  std::vector<double> x(100);
  std::iota(x.begin(), x.end(), 0.0);
  const auto members = iota(100);
  const auto p = equal_mass_partition(members, {x.data()}, 50, 10);
  expect_is_partition(p, members);
  EXPECT_LE(p.n_bins(), 10);
  for (int b = 0; b < p.n_bins(); ++b) EXPECT_GE(p.size(b), 10);
}

TEST(Partition, SubsetOfMembersOnly) {
  std::vector<double> x(50);
  std::iota(x.begin(), x.end(), 0.0);
  std::vector<int> members;
  for (int i = 0; i < 50; i += 2) members.push_back(i);
  const auto p = equal_mass_partition(members, {x.data()}, 5, 1);
  expect_is_partition(p, members);
  const auto empty = equal_mass_partition({}, {x.data()}, 5, 1);
  EXPECT_EQ(empty.n_bins(), 0);
}

TEST(Partition, TwoDimensionalGrid) {
  std::mt19937 g(9);
  std::uniform_real_distribution<double> u;
  std::vector<double> a(4000), b(4000);
  for (int i = 0; i < 4000; ++i) a[i] = u(g), b[i] = u(g);
  const auto members = iota(4000);
  const auto p = equal_mass_partition(members, {a.data(), b.data()}, 16, 10);
  expect_is_partition(p, members);
  EXPECT_EQ(p.n_bins(), 16);
  for (int k = 0; k < p.n_bins(); ++k) EXPECT_NEAR(p.size(k), 250, 1);
}

TEST(Partition, RejectsBadArguments) {
  std::vector<double> x(10, 1.0);
  EXPECT_THROW(equal_mass_partition(iota(10), {}, 5, 1), NumericalError);
  EXPECT_THROW(equal_mass_partition(iota(10), {x.data()}, 0, 1), NumericalError);
}
