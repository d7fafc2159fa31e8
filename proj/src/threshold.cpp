#include "fairrank/threshold.hpp"

#include "fairrank/effects.hpp"
#include "fairrank/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fairrank {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kSqrtPi = 1.7724538509055160273;

[[noreturn]] void fail(const std::string& msg) {
  throw ValidationError("threshold", msg);
}

}  // namespace

CutoffContext make_cutoff_context(const CausalModel& model,
                                  const std::string& favorable_value,
                                  double theta, double tau,
                                  double sigma_override, double sigma_tol) {
  const int c_node = model.graph.protected_node();
  const int fav = model.value_code(c_node, favorable_value);
  const int unfav = 1 - fav;

  CutoffContext ctx;
  ctx.theta = theta;
  ctx.tau = tau;

  if (sigma_override > 0) {
    ctx.sigma = sigma_override;
  } else {
    double lo = model.cg.entries.front().sigma;
    double hi = lo;
    for (const auto& e : model.cg.entries) {
      lo = std::min(lo, e.sigma);
      hi = std::max(hi, e.sigma);
    }
    if (hi - lo > sigma_tol) {
      fail("CG sigmas differ by " + std::to_string(hi - lo) +
           "; the cut-off analysis assumes a common sigma (pass an override "
           "to assume one)");
    }
    ctx.sigma = lo;
  }

  const auto p_fav = q_distribution(model, fav);
  const auto p_unfav = q_distribution(model, unfav);
  const std::size_t q_count = model.q_config_count();
  ctx.mu_fav.resize(q_count);
  ctx.mu_unfav.resize(q_count);
  ctx.p_q_unfav.resize(q_count);
  ctx.delta_q.resize(q_count);
  for (std::size_t qi = 0; qi < q_count; ++qi) {
    ctx.mu_fav[qi] = model.cg_entry(fav, qi).mu;
    ctx.mu_unfav[qi] = model.cg_entry(unfav, qi).mu;
    ctx.p_q_unfav[qi] = p_unfav[qi];
    ctx.delta_q[qi] = p_fav[qi] - p_unfav[qi];
  }
  validate_cutoff_context(ctx);
  return ctx;
}

void validate_cutoff_context(const CutoffContext& ctx) {
  const std::size_t n = ctx.mu_fav.size();
  if (ctx.mu_unfav.size() != n || ctx.p_q_unfav.size() != n ||
      ctx.delta_q.size() != n || n == 0) {
    fail("cutoff context stratum vectors are empty or mismatched");
  }
  if (!(ctx.sigma > 0)) fail("sigma must be positive");
  for (std::size_t qi = 0; qi < n; ++qi) {
    if (!(ctx.theta >= ctx.mu_fav[qi] && ctx.mu_fav[qi] >= ctx.mu_unfav[qi])) {
      fail("condition theta >= mu_{c+,q} >= mu_{c-,q} violated at stratum " +
           std::to_string(qi));
    }
  }
}

double binary_direct_effect(const CutoffContext& ctx) {
  validate_cutoff_context(ctx);
  const double denom = kSqrt2 * ctx.sigma;
  double effect = 0.0;
  for (std::size_t qi = 0; qi < ctx.mu_fav.size(); ++qi) {
    effect += 0.5 *
              (std::erf((ctx.theta - ctx.mu_unfav[qi]) / denom) -
               std::erf((ctx.theta - ctx.mu_fav[qi]) / denom)) *
              ctx.p_q_unfav[qi];
  }
  return effect;
}

double binary_indirect_effect(const CutoffContext& ctx) {
  validate_cutoff_context(ctx);
  const double denom = kSqrt2 * ctx.sigma;
  double effect = 0.0;
  for (std::size_t qi = 0; qi < ctx.mu_fav.size(); ++qi) {
    effect += 0.5 * (1.0 - std::erf((ctx.theta - ctx.mu_unfav[qi]) / denom)) *
              ctx.delta_q[qi];
  }
  return effect;
}

std::pair<double, double> erf_concavity_gap(double x1, double x2) {
  if (!(x1 >= x2 && x2 >= 0)) {
    fail("erf_concavity_gap requires x1 >= x2 >= 0");
  }
  return {0.5 * (std::erf(x1) - std::erf(x2)), std::erf(0.5 * (x1 - x2))};
}

ErfLinearBounds erf_linear_bounds(double t) {
  if (t < 0) fail("erf_linear_bounds requires t >= 0");
  ErfLinearBounds b;
  b.t = t;
  if (t < 1e-12) {
    // Series limit: erf(t)/t -> 2/sqrt(pi), tangent offset -> 0.
    b.alpha_t = 2.0 / kSqrtPi;
    b.beta_t = 0.0;
    return b;
  }
  b.alpha_t = std::erf(t) / t;
  // 2t / (sqrt(pi) erf(t)) >= 1 because erf is concave with slope 2/sqrt(pi)
  // at zero; clamp tiny negative logs from rounding.
  const double ratio = 2.0 * t / (kSqrtPi * std::erf(t));
  if (ratio < 1.0 - 1e-12) {
    fail("logarithm domain violation in erf_linear_bounds");
  }
  const double root = std::sqrt(std::max(0.0, std::log(ratio)));
  b.beta_t = std::erf(root) - b.alpha_t * root;
  return b;
}

double context_direct_effect(const CutoffContext& ctx) {
  double se = 0.0;
  for (std::size_t qi = 0; qi < ctx.mu_fav.size(); ++qi) {
    se += (ctx.mu_fav[qi] - ctx.mu_unfav[qi]) * ctx.p_q_unfav[qi];
  }
  return se;
}

double context_indirect_effect(const CutoffContext& ctx) {
  // Simplified all-indirect form: sum_q mu_{c-,q} (P(q|c+) - P(q|c-)).
  double se = 0.0;
  for (std::size_t qi = 0; qi < ctx.mu_fav.size(); ++qi) {
    se += ctx.mu_unfav[qi] * ctx.delta_q[qi];
  }
  return se;
}

BudgetResult rank_budget_for_binary_direct(const CutoffContext& ctx) {
  validate_cutoff_context(ctx);
  double t = 0.0;
  for (std::size_t qi = 0; qi < ctx.mu_fav.size(); ++qi) {
    t = std::max(t, (ctx.mu_fav[qi] - ctx.mu_unfav[qi]) / (2.0 * kSqrt2 * ctx.sigma));
  }
  const ErfLinearBounds b = erf_linear_bounds(t);
  BudgetResult r;
  r.t = t;
  r.alpha_t = b.alpha_t;
  r.beta_t = b.beta_t;
  r.budget = 2.0 * kSqrt2 * (ctx.tau - b.beta_t) * ctx.sigma / b.alpha_t;
  return r;
}

BudgetResult rank_budget_for_binary_indirect(const CutoffContext& ctx,
                                             double max_score) {
  validate_cutoff_context(ctx);
  double t = 0.0;
  for (std::size_t qi = 0; qi < ctx.mu_unfav.size(); ++qi) {
    t = std::max(t, (max_score - ctx.mu_unfav[qi]) / (kSqrt2 * ctx.sigma));
  }
  if (t < 0) fail("max_score must not be below every unfavorable mean");
  const ErfLinearBounds b = erf_linear_bounds(t);

  // Constant c exactly as printed in its source: unweighted sums over the
  // strata split by the sign of delta_q.
  const double mu_fav_max = *std::max_element(ctx.mu_fav.begin(), ctx.mu_fav.end());
  double c = 0.5;
  for (std::size_t qi = 0; qi < ctx.delta_q.size(); ++qi) {
    if (ctx.delta_q[qi] >= 0) {
      c -= b.alpha_t * mu_fav_max / kSqrt2;
    } else {
      c -= b.alpha_t / (2.0 * kSqrt2) + b.beta_t;
    }
  }

  BudgetResult r;
  r.t = t;
  r.alpha_t = b.alpha_t;
  r.beta_t = b.beta_t;
  r.c = c;
  r.budget = 2.0 * kSqrt2 * (ctx.tau - c) * ctx.sigma / b.alpha_t;
  return r;
}

bool check_direct_budget_implication(const CutoffContext& ctx) {
  const BudgetResult r = rank_budget_for_binary_direct(ctx);
  if (context_direct_effect(ctx) > r.budget) return true;  // premise fails
  return binary_direct_effect(ctx) <= ctx.tau + 1e-9;
}

bool check_indirect_budget_implication(const CutoffContext& ctx,
                                       double max_score) {
  const BudgetResult r = rank_budget_for_binary_indirect(ctx, max_score);
  if (context_indirect_effect(ctx) > r.budget) return true;  // premise fails
  return binary_indirect_effect(ctx) <= ctx.tau + 1e-9;
}

}  // namespace fairrank
