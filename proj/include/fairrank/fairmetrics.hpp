#pragma once

#include "fairrank/dataset.hpp"

#include <cstdint>
#include <vector>

namespace fairrank {

// Prefix-based statistical-parity report. The protected group is the set of
// individuals whose protected-attribute value differs from the favorable one.
//
// Formulas (the contract; the source material describes these measures only
// in prose):
//   at each cut i: p_i = protected count in the top-i prefix / i,
//                  p   = protected count / N,
//   term_rND(i) = |p_i - p|
//   term_rRD(i) = |r(p_i) - r(p)|       r(x) = x/(1-x), x clamped to
//                                       [0, 1 - 1/(2N)] against division by 0
//   term_rKL(i) = KL((p_i,1-p_i) || (p,1-p))   natural log, 0*log 0 = 0
// Each term is discounted by 1/log2(i) and the sum is divided by the same sum
// on the worst-case ranking (every protected individual at the bottom), then
// clipped to [0,1]. Rankings more extreme than that reference (protected
// group packed on top while being the minority) saturate at 1.
// If p is 0 or 1 the measures are defined as 0 and `degenerate` is set.
struct ParityReport {
  std::vector<int> cut_points;
  double rnd = 0.0, rrd = 0.0, rkl = 0.0;
  double z_rnd = 0.0, z_rrd = 0.0, z_rkl = 0.0;  // worst-case normalizers
  bool degenerate = false;
};

// Cut points must be >= 2, strictly increasing and <= N; the default is
// 10, 20, ..., N.
ParityReport parity_measures(const RankedDataset& data,
                             std::vector<int> cut_points = {});

// Number of pairwise inversions between two rank permutations (positions per
// individual, 1-based). O(N log N) merge count.
std::int64_t kendall_tau_distance(const std::vector<int>& r1,
                                  const std::vector<int>& r2);

// Total element-wise displacement sum_i |r1[i] - r2[i]|.
std::int64_t spearman_footrule(const std::vector<int>& r1,
                               const std::vector<int>& r2);

}  // namespace fairrank
