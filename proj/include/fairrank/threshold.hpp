#pragma once

#include "fairrank/graph.hpp"

#include <string>
#include <vector>

namespace fairrank {

// Inputs for relating rank-level effects to a binary decision obtained by
// thresholding the score at theta. Valid only under the equal-variance
// condition sigma_{c+,q} = sigma_{c-,q} = sigma and theta >= mu_{c+,q}
// >= mu_{c-,q} for every stratum.
//
// delta_q is not defined by the source material for this setting; this
// library defines it as P(q|c+) - P(q|c-), the only choice consistent with
// the simplified indirect-effect expression. make_cutoff_context fills it
// accordingly; callers building a context by hand may override.
struct CutoffContext {
  double theta = 0.0;
  double sigma = 1.0;
  std::vector<double> mu_fav;      // mu_{c+,q} per stratum
  std::vector<double> mu_unfav;    // mu_{c-,q} per stratum
  std::vector<double> p_q_unfav;   // P(q|c-)
  std::vector<double> delta_q;     // P(q|c+) - P(q|c-) by default
  double tau = 0.05;
};

// Builds a context from a parameterized model. All CG sigmas must agree
// within sigma_tol (or pass sigma_override > 0 to assume a common value).
CutoffContext make_cutoff_context(const CausalModel& model,
                                  const std::string& favorable_value,
                                  double theta, double tau,
                                  double sigma_override = 0.0,
                                  double sigma_tol = 1e-9);

// Throws ValidationError unless sigma > 0, the stratum vectors agree in
// length, and theta >= mu_{c+,q} >= mu_{c-,q} holds for every q.
void validate_cutoff_context(const CutoffContext& ctx);

// Binary-decision path-specific effects under the cut-off:
//   direct:   sum_q (erf((theta-mu-)/(sqrt2 s)) - erf((theta-mu+)/(sqrt2 s)))/2 * P(q|c-)
//   indirect: sum_q (1 - erf((theta-mu-)/(sqrt2 s)))/2 * delta_q
double binary_direct_effect(const CutoffContext& ctx);
double binary_indirect_effect(const CutoffContext& ctx);

// Both sides of the concavity inequality (erf(x1)-erf(x2))/2 <= erf((x1-x2)/2)
// for x1 >= x2 >= 0, returned as (lhs, rhs) for property testing.
std::pair<double, double> erf_concavity_gap(double x1, double x2);

// Linear envelope of erf on [0, t]: alpha_t * x <= erf(x) <= alpha_t * x
// + beta_t with alpha_t = erf(t)/t (limit 2/sqrt(pi) at t=0) and beta_t the
// tangent-offset constant. Requires t >= 0.
struct ErfLinearBounds {
  double t = 0.0;
  double alpha_t = 0.0;
  double beta_t = 0.0;
};
ErfLinearBounds erf_linear_bounds(double t);

// A rank-level effect budget that guarantees the corresponding binary
// decision effect stays within tau.
struct BudgetResult {
  double budget = 0.0;
  double t = 0.0;
  double alpha_t = 0.0;
  double beta_t = 0.0;
  double c = 0.0;  // only meaningful for the indirect budget
};

// Direct bound: SE_{pi_d} <= 2*sqrt(2)*(tau - beta_t)*sigma / alpha_t with
// t = max_q (mu+ - mu-)/(2*sqrt(2)*sigma) implies the binary direct effect
// is at most tau.
BudgetResult rank_budget_for_binary_direct(const CutoffContext& ctx);

// Indirect bound, implemented verbatim from its source statement (the
// constant c sums unweighted terms over q); outputs are labelled
// "as printed" and should be interpreted together with the empirical
// checker below. max_score is max{s} observed in the data.
BudgetResult rank_budget_for_binary_indirect(const CutoffContext& ctx,
                                             double max_score);

// Empirical checks of the two bound theorems on a concrete context: when the
// rank-level effect is within the stated budget, does the binary effect stay
// within tau (+1e-9)? Vacuously true when the budget premise fails.
bool check_direct_budget_implication(const CutoffContext& ctx);
bool check_indirect_budget_implication(const CutoffContext& ctx,
                                       double max_score);

// Rank-level effects recomputed from the context's own fields (used by the
// budget checkers; matches the effects-module formulas).
double context_direct_effect(const CutoffContext& ctx);
double context_indirect_effect(const CutoffContext& ctx);

}  // namespace fairrank
