#pragma once

#include "fairrank/dataset.hpp"
#include "fairrank/effects.hpp"
#include "fairrank/graph.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fairrank {

// Bhattacharyya distance between N(mu1, sigma^2) and N(mu2, sigma^2):
// (mu1 - mu2)^2 / (8 sigma^2).
double bhattacharyya_distance(double mu1, double mu2, double sigma);

// One linear inequality a^T x <= b over the per-stratum means.
struct QpConstraint {
  std::string name;
  std::vector<double> a;
  double b = 0.0;
};

// minimize sum_v weight_v (x_v - target_v)^2  s.t.  constraints.
// Variables are the CG means in CgTable entry order; weight_v = 1/sigma_v^2.
struct RepairQp {
  std::vector<std::string> var_names;  // canonical stratum keys
  std::vector<double> weights;
  std::vector<double> target;
  std::vector<QpConstraint> constraints;
  double tau = 0.05;
  double epsilon = 1e-6;
};

// Encodes the four DE constraints exactly: each DE(u,v) <= tau becomes
// SE(u,v) - tau * E'[S|c+] <= 0, with both sides linear in the means because
// the strata probabilities are model constants; E'[S|c+] >= epsilon guards
// the moving denominator. Always feasible (any constant mean >= epsilon
// satisfies everything). Throws UnidentifiableError via the path partition.
RepairQp build_repair_qp(const CausalModel& model, const PathSet& indirect_paths,
                         const std::string& favorable_value, double tau,
                         double epsilon = 1e-6);

struct RepairPlan {
  std::vector<std::string> var_names;
  std::vector<double> original_means;
  std::vector<double> repaired_means;
  double objective_value = 0.0;  // sum (mu - mu')^2 / sigma^2 at the solution
  std::vector<std::string> active_constraints;
  double kkt_residual = 0.0;
  double tau = 0.05;
  int iterations = 0;
};

// Primal active-set solver specialized to a diagonal Hessian and a handful of
// inequality rows. Deterministic; verifies the KKT conditions on exit and
// reports the residual. Throws ConvergenceError if the iteration cap hits.
RepairPlan solve_repair_qp(const RepairQp& qp);

struct RepairedRanking {
  std::vector<double> new_scores;
  std::vector<int> new_rank;
  std::vector<double> shift_applied;  // per individual, mu' - mu of its stratum
  std::vector<int> stratum_index;     // per individual, CG entry index
};

// Applies the plan: every individual's score moves by its stratum's mean
// shift (same percentile in the shifted Gaussian), then the ranking is
// rebuilt by descending new score with ties broken by the original position.
RepairedRanking regenerate_and_rerank(const RankedDataset& data,
                                      const ScoreAssignment& scores,
                                      const CausalModel& model,
                                      const RepairPlan& plan);

struct FrankResult {
  EffectReport before;
  EffectReport after;  // equals `before` when no repair ran
  bool repaired = false;
  std::optional<RepairPlan> plan;
  RepairedRanking ranking;
  CausalModel repaired_model;
};

// Detect-then-repair. Exits early with the input unchanged when no
// discrimination is detected; otherwise solves the QP, regenerates scores and
// ranking, and re-audits the repaired model (all four DE must come back
// within tau + 1e-6, else ConvergenceError).
FrankResult frank(const RankedDataset& data, const ScoreAssignment& scores,
                  const CausalModel& model, const PathSet& indirect_paths,
                  const std::string& favorable_value, double tau,
                  double epsilon = 1e-6);

}  // namespace fairrank
