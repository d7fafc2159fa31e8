#pragma once

#include "fairrank/dataset.hpp"
#include "fairrank/graph.hpp"

#include <string>
#include <vector>

namespace fairrank {

struct CiTestResult {
  std::string x, y;
  std::vector<std::string> conditioning_set;
  double statistic = 0.0;
  double p_value = 1.0;
  bool independent = true;
  // Set when counts were too thin to decide (empty tables, any expected cell
  // below 1, or no degrees of freedom). Treated as independent to bias the
  // search toward sparser graphs.
  bool inconclusive = false;
  double df = 0.0;
};

// Pearson chi-square test of x vs y stratified over every assignment of the
// conditioning attributes; degrees of freedom sum (r-1)(c-1) over strata,
// counting only rows/columns observed in that stratum.
CiTestResult chi_square_ci(const RankedDataset& data, const std::string& x,
                           const std::string& y,
                           const std::vector<std::string>& cond, double alpha);

// Likelihood-ratio test of the score against a discrete attribute y given
// discrete conditioning attributes: twice the gain in Gaussian log likelihood
// from splitting each conditioning stratum by y, against a chi-square with
// two free parameters per extra nonempty stratum. With an empty conditioning
// set this is a two-sample (per y value) Gaussian LR test.
CiTestResult cg_likelihood_ratio_ci(const RankedDataset& data,
                                    const ScoreAssignment& scores,
                                    const std::string& y,
                                    const std::vector<std::string>& cond,
                                    double alpha);

struct StructureConfig {
  double alpha = 0.05;
  int max_cond = 3;  // largest conditioning-set size tried
};

// PC-stable skeleton search over the profile attributes plus the score node
// ("__score"), with background knowledge enforced throughout: no edge into
// the protected attribute, no edge out of the score. Collider orientation,
// propagation rules, then a deterministic completion (lexicographically
// smaller name points to larger, subject to acyclicity). The score node is
// never used in a conditioning set (it is a sink under the background
// knowledge, so conditioning on it can only unblock paths).
//
// Deterministic: identical data and config produce the identical graph.
// Inconclusive tests are appended to `warnings` when given.
CausalGraph learn_structure(const RankedDataset& data,
                            const ScoreAssignment& scores,
                            const StructureConfig& config,
                            std::vector<std::string>* warnings = nullptr);

}  // namespace fairrank
