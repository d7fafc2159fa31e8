#include "fairrank/repair.hpp"

#include "fairrank/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fairrank {

double bhattacharyya_distance(double mu1, double mu2, double sigma) {
  if (!(sigma > 0)) {
    throw ValidationError("repair", "sigma must be positive");
  }
  const double d = mu1 - mu2;
  return d * d / (8.0 * sigma * sigma);
}

RepairQp build_repair_qp(const CausalModel& model, const PathSet& indirect_paths,
                         const std::string& favorable_value, double tau,
                         double epsilon) {
  if (tau < 0) throw ValidationError("repair", "tau must be nonnegative");
  if (!(epsilon > 0)) throw ValidationError("repair", "epsilon must be positive");
  validate_model(model);

  const int c_node = model.graph.protected_node();
  const int fav = model.value_code(c_node, favorable_value);
  const std::string& fav_value =
      model.domains[static_cast<std::size_t>(c_node)][static_cast<std::size_t>(fav)];
  const std::string& unfav_value =
      model.domains[static_cast<std::size_t>(c_node)][static_cast<std::size_t>(1 - fav)];

  RepairQp qp;
  qp.tau = tau;
  qp.epsilon = epsilon;
  const std::size_t nvars = model.cg.entries.size();
  qp.var_names.resize(nvars);
  qp.weights.resize(nvars);
  qp.target.resize(nvars);
  for (int c = 0; c < 2; ++c) {
    for (std::size_t qi = 0; qi < model.q_config_count(); ++qi) {
      const std::size_t v = model.cg_index(c, qi);
      const CgEntry& e = model.cg.entries[v];
      qp.var_names[v] = model.cg_key(c, qi);
      qp.weights[v] = 1.0 / (e.sigma * e.sigma);
      qp.target[v] = e.mu;
    }
  }

  const std::vector<double> mean_coef = mean_score_coefficients(model, fav_value);

  auto add_de_row = [&](const std::string& name, const PathSet& pi,
                        const std::string& from, const std::string& to) {
    std::vector<double> se = path_effect_coefficients(model, pi, from, to);
    double norm = 0.0;
    for (std::size_t v = 0; v < nvars; ++v) {
      se[v] -= tau * mean_coef[v];
      norm = std::max(norm, std::abs(se[v]));
    }
    // An identically-zero row (e.g. tau = 0 with an empty path set) is
    // trivially satisfied and would only break the working-set algebra.
    if (norm < 1e-15) return;
    qp.constraints.push_back(QpConstraint{name, std::move(se), 0.0});
  };

  if (model.graph.has_edge(c_node, model.graph.score_node())) {
    const PathSet pi_d = direct_path_set(model.graph);
    add_de_row("de_d_fwd", pi_d, fav_value, unfav_value);
    add_de_row("de_d_rev", pi_d, unfav_value, fav_value);
  }
  add_de_row("de_i_fwd", indirect_paths, fav_value, unfav_value);
  add_de_row("de_i_rev", indirect_paths, unfav_value, fav_value);

  QpConstraint guard;
  guard.name = "baseline_guard";
  guard.a.resize(nvars);
  for (std::size_t v = 0; v < nvars; ++v) guard.a[v] = -mean_coef[v];
  guard.b = -epsilon;
  qp.constraints.push_back(std::move(guard));

  return qp;
}

namespace {

// Solves the k-by-k system M y = rhs in place by Gaussian elimination with
// partial pivoting. Returns false when M is numerically singular.
bool solve_dense(std::vector<std::vector<double>> m, std::vector<double> rhs,
                 std::vector<double>& out) {
  const std::size_t k = rhs.size();
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < k; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    }
    if (std::abs(m[pivot][col]) < 1e-14) return false;
    std::swap(m[col], m[pivot]);
    std::swap(rhs[col], rhs[pivot]);
    for (std::size_t r = col + 1; r < k; ++r) {
      const double f = m[r][col] / m[col][col];
      for (std::size_t c = col; c < k; ++c) m[r][c] -= f * m[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  out.assign(k, 0.0);
  for (std::size_t row = k; row-- > 0;) {
    double v = rhs[row];
    for (std::size_t c = row + 1; c < k; ++c) v -= m[row][c] * out[c];
    out[row] = v / m[row][row];
  }
  return true;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

RepairPlan solve_repair_qp(const RepairQp& qp) {
  const std::size_t n = qp.target.size();
  const std::size_t m = qp.constraints.size();
  for (double w : qp.weights) {
    if (!(w > 0) || !std::isfinite(w)) {
      throw ValidationError("repair", "QP weights must be positive and finite");
    }
  }

  auto violation = [&](const std::vector<double>& x, std::size_t i) {
    return dot(qp.constraints[i].a, x) - qp.constraints[i].b;
  };
  auto feasible = [&](const std::vector<double>& x, double tol) {
    for (std::size_t i = 0; i < m; ++i) {
      if (violation(x, i) > tol) return false;
    }
    return true;
  };

  // Strictly interior constant point: every SE row vanishes on a constant
  // mean vector and the guard holds for any value above epsilon.
  const std::vector<double> interior(n, std::max(1.0, 2.0 * qp.epsilon));

  std::vector<double> x;
  if (feasible(qp.target, 0.0)) {
    x = qp.target;  // unconstrained optimum is feasible: zero modification
  } else {
    x = interior;
  }

  std::vector<std::size_t> working;  // indices into qp.constraints
  std::vector<double> lambda;        // aligned with `working`

  // Solves the equality-constrained subproblem on the current working set:
  // y = t - (1/2) W^-1 A^T lam,  (A W^-1 A^T) lam = 2 (A t - b).
  auto solve_working = [&](std::vector<double>& y, std::vector<double>& lam) {
    const std::size_t k = working.size();
    if (k == 0) {
      y = qp.target;
      lam.clear();
      return true;
    }
    std::vector<std::vector<double>> mat(k, std::vector<double>(k, 0.0));
    std::vector<double> rhs(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      const auto& ai = qp.constraints[working[i]].a;
      for (std::size_t j = i; j < k; ++j) {
        const auto& aj = qp.constraints[working[j]].a;
        double v = 0;
        for (std::size_t t = 0; t < n; ++t) v += ai[t] * aj[t] / qp.weights[t];
        mat[i][j] = v;
        mat[j][i] = v;
      }
      rhs[i] = 2.0 * (dot(ai, qp.target) - qp.constraints[working[i]].b);
    }
    if (!solve_dense(std::move(mat), std::move(rhs), lam)) return false;
    y = qp.target;
    for (std::size_t i = 0; i < k; ++i) {
      const auto& ai = qp.constraints[working[i]].a;
      for (std::size_t t = 0; t < n; ++t) {
        y[t] -= 0.5 * ai[t] * lam[i] / qp.weights[t];
      }
    }
    return true;
  };

  const int iter_cap = 50 * static_cast<int>(m + 2);
  int iter = 0;
  std::vector<double> y, lam;
  for (; iter < iter_cap; ++iter) {
    if (!solve_working(y, lam)) {
      // Dependent working set; drop the newest row and retry.
      working.pop_back();
      continue;
    }

    double step_to_y = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      step_to_y = std::max(step_to_y, std::abs(y[t] - x[t]));
    }
    double xscale = 1.0;
    for (std::size_t t = 0; t < n; ++t) xscale = std::max(xscale, std::abs(x[t]));

    if (step_to_y <= 1e-13 * xscale) {
      // On the face optimum: check multiplier signs.
      double min_lam = 0.0;
      std::size_t drop = working.size();
      for (std::size_t i = 0; i < working.size(); ++i) {
        if (lam[i] < min_lam) {
          min_lam = lam[i];
          drop = i;
        }
      }
      if (min_lam >= -1e-12) {
        x = y;
        lambda = lam;
        break;  // KKT satisfied
      }
      working.erase(working.begin() + static_cast<std::ptrdiff_t>(drop));
      continue;
    }

    // Step toward y, stopping at the nearest blocking constraint.
    double alpha = 1.0;
    std::size_t blocker = m;
    for (std::size_t i = 0; i < m; ++i) {
      if (std::find(working.begin(), working.end(), i) != working.end()) continue;
      double adx = 0;
      for (std::size_t t = 0; t < n; ++t) {
        adx += qp.constraints[i].a[t] * (y[t] - x[t]);
      }
      if (adx <= 1e-14) continue;
      const double slack = qp.constraints[i].b - dot(qp.constraints[i].a, x);
      const double ai_alpha = slack / adx;
      if (ai_alpha < alpha - 1e-15) {
        alpha = std::max(0.0, ai_alpha);
        blocker = i;
      }
    }
    for (std::size_t t = 0; t < n; ++t) x[t] += alpha * (y[t] - x[t]);
    if (blocker < m) {
      working.push_back(blocker);
    } else {
      // Full step onto the face optimum; next pass checks multipliers.
      x = y;
    }
  }
  if (iter >= iter_cap) {
    throw ConvergenceError("repair", "active-set solver hit its iteration cap");
  }

  // Interior polish: linear constraints, so a convex pull toward the strictly
  // interior point removes any rounding-level violation without measurably
  // moving the objective. Not available at tau = 0 (the feasible set can have
  // an empty interior); violations there are at rounding level by the solve.
  double worst = 0.0;
  for (std::size_t i = 0; i < m; ++i) worst = std::max(worst, violation(x, i));
  if (worst > 0 && qp.tau > 0) {
    double theta = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double gx = violation(x, i);
      if (gx <= 0) continue;
      const double gi = violation(interior, i);
      if (gi >= 0) {
        theta = 1.0;  // cannot happen for the rows we build; fall through
        break;
      }
      theta = std::max(theta, gx / (gx - gi) * (1.0 + 1e-12));
    }
    theta = std::min(theta, 1.0);
    for (std::size_t t = 0; t < n; ++t) {
      x[t] = (1.0 - theta) * x[t] + theta * interior[t];
    }
  }

  RepairPlan plan;
  plan.var_names = qp.var_names;
  plan.original_means = qp.target;
  plan.repaired_means = x;
  plan.tau = qp.tau;
  plan.iterations = iter;
  for (std::size_t t = 0; t < n; ++t) {
    const double d = x[t] - qp.target[t];
    plan.objective_value += qp.weights[t] * d * d;
  }

  // KKT residuals: stationarity, primal feasibility, dual feasibility,
  // complementary slackness.
  std::vector<double> full_lambda(m, 0.0);
  for (std::size_t i = 0; i < working.size(); ++i) {
    full_lambda[working[i]] = lambda.size() == working.size() ? lambda[i] : 0.0;
  }
  double residual = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    double g = 2.0 * qp.weights[t] * (x[t] - qp.target[t]);
    for (std::size_t i = 0; i < m; ++i) {
      g += full_lambda[i] * qp.constraints[i].a[t];
    }
    residual = std::max(residual, std::abs(g) / std::max(1.0, qp.weights[t]));
  }
  for (std::size_t i = 0; i < m; ++i) {
    const double gx = violation(x, i);
    residual = std::max(residual, gx);                        // primal
    residual = std::max(residual, -full_lambda[i]);           // dual
    residual = std::max(residual, std::abs(full_lambda[i] * gx));
    if (full_lambda[i] > 1e-10) {
      plan.active_constraints.push_back(qp.constraints[i].name);
    }
  }
  plan.kkt_residual = std::max(0.0, residual);
  if (plan.kkt_residual > 1e-8) {
    throw ConvergenceError("repair",
                           "KKT residual " + std::to_string(plan.kkt_residual) +
                               " exceeds 1e-8 after the active-set solve");
  }
  return plan;
}

RepairedRanking regenerate_and_rerank(const RankedDataset& data,
                                      const ScoreAssignment& scores,
                                      const CausalModel& model,
                                      const RepairPlan& plan) {
  if (scores.scores.size() != data.size()) {
    throw ValidationError("repair", "scores are not aligned with the dataset");
  }
  if (plan.original_means.size() != model.cg.entries.size()) {
    throw ValidationError("repair", "plan does not cover the model's strata");
  }
  const int c_node = model.graph.protected_node();
  const int c_col = data.attribute_index(model.graph.name(c_node));
  const auto q = model.q_nodes();
  std::vector<int> q_cols(q.size());
  for (std::size_t k = 0; k < q.size(); ++k) {
    q_cols[k] = data.attribute_index(model.graph.name(q[k]));
  }

  const std::size_t nrows = data.size();
  RepairedRanking out;
  out.new_scores.resize(nrows);
  out.shift_applied.resize(nrows);
  out.stratum_index.resize(nrows);
  std::vector<int> q_codes(q.size());
  for (std::size_t r = 0; r < nrows; ++r) {
    // Codes go through the model's domains (value strings), which may be
    // ordered differently from the dataset's.
    const int c = model.value_code(c_node, data.value(r, static_cast<std::size_t>(c_col)));
    for (std::size_t k = 0; k < q.size(); ++k) {
      q_codes[k] = model.value_code(q[k], data.value(r, static_cast<std::size_t>(q_cols[k])));
    }
    const std::size_t idx = model.cg_index(c, model.q_index(q_codes));
    const double shift = plan.repaired_means[idx] - plan.original_means[idx];
    out.stratum_index[r] = static_cast<int>(idx);
    out.shift_applied[r] = shift;
    out.new_scores[r] = scores.scores[r] + shift;
  }

  // Descending new score; ties keep the original order (smaller old position
  // first).
  std::vector<std::size_t> order(nrows);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (out.new_scores[a] != out.new_scores[b]) {
      return out.new_scores[a] > out.new_scores[b];
    }
    return data.rank_of(a) < data.rank_of(b);
  });
  out.new_rank.resize(nrows);
  for (std::size_t pos = 0; pos < nrows; ++pos) {
    out.new_rank[order[pos]] = static_cast<int>(pos + 1);
  }
  return out;
}

FrankResult frank(const RankedDataset& data, const ScoreAssignment& scores,
                  const CausalModel& model, const PathSet& indirect_paths,
                  const std::string& favorable_value, double tau,
                  double epsilon) {
  FrankResult result{.before = fdetect(model, indirect_paths, favorable_value, tau),
                     .after = {},
                     .repaired = false,
                     .plan = std::nullopt,
                     .ranking = {},
                     .repaired_model = model};
  if (!result.before.judge_d && !result.before.judge_i) {
    result.after = result.before;
    result.ranking.new_scores = scores.scores;
    result.ranking.new_rank = data.rank();
    result.ranking.shift_applied.assign(data.size(), 0.0);
    result.ranking.stratum_index.assign(data.size(), -1);
    return result;
  }

  const RepairQp qp = build_repair_qp(model, indirect_paths, favorable_value,
                                      tau, epsilon);
  RepairPlan plan = solve_repair_qp(qp);

  CausalModel repaired = model;
  for (std::size_t v = 0; v < plan.repaired_means.size(); ++v) {
    repaired.cg.entries[v].mu = plan.repaired_means[v];
  }
  result.after = fdetect(repaired, indirect_paths, favorable_value, tau);
  const double worst_after =
      std::max({result.after.de_d_fwd, result.after.de_d_rev,
                result.after.de_i_fwd, result.after.de_i_rev});
  if (worst_after > tau + 1e-6) {
    throw ConvergenceError("repair",
                           "repaired model still exceeds tau by " +
                               std::to_string(worst_after - tau));
  }
  result.ranking = regenerate_and_rerank(data, scores, model, plan);
  result.repaired = true;
  result.plan = std::move(plan);
  result.repaired_model = std::move(repaired);
  return result;
}

}  // namespace fairrank
