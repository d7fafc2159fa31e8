#pragma once

#include "fairrank/dataset.hpp"

#include <utility>
#include <vector>

namespace fairrank {

struct BTFitConfig {
  // L2 weight. Must be > 0 for fit_scores: a fully consistent total order is
  // separable, so the unregularized maximum likelihood diverges.
  double lambda = 0.5;
  int max_iters = 10000;
  double tol = 1e-8;  // stopping threshold on the gradient L2 norm
  double gauge_anchor = 1.0;
};

struct BTFitDiagnostics {
  double final_loss = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;
  bool converged = false;
  bool rank_consistent = false;
  std::vector<double> loss_history;  // loss after each accepted step
};

// P(i ranked before j) = e^{s_i} / (e^{s_i} + e^{s_j}), evaluated in a form
// that is stable for large |s_i - s_j|.
double pair_probability(double s_i, double s_j);

// Negative log likelihood of the full order plus (lambda/2)*sum(s^2), with its
// exact analytic gradient. rank[i] is individual i's position (1 = top); every
// pair (i, j) with rank[i] < rank[j] contributes -log p_ij.
std::pair<double, std::vector<double>> bt_loss_and_gradient(
    const std::vector<double>& scores, const std::vector<int>& rank,
    double lambda);

// Fits scores by full-batch gradient descent with Armijo backtracking
// (Barzilai-Borwein trial step), then shifts them so the mean equals
// config.gauge_anchor. The shift is recorded in the returned gauge.
std::pair<ScoreAssignment, BTFitDiagnostics> fit_scores(
    const RankedDataset& data, const BTFitConfig& config);

}  // namespace fairrank
