// Test-side oracles, independent of the library implementation paths they
// check: finite differences, quadrature, exhaustive enumeration, and
// brute-force counting.
#pragma once

#include "fairrank/effects.hpp"
#include "fairrank/graph.hpp"
#include "fairrank/repair.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <vector>

namespace oracles {

// Central finite differences.
inline std::vector<double> finite_difference_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f(x);
    x[i] = orig - h;
    const double fm = f(x);
    x[i] = orig;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

// erf via composite 20-node Gauss-Legendre quadrature of the Gaussian kernel;
// independent of std::erf.
inline double erf_quadrature(double x) {
  static const double nodes[10] = {
      0.0765265211334973, 0.2277858511416451, 0.3737060887154195,
      0.5108670019508271, 0.6360536807265150, 0.7463319064601508,
      0.8391169718222188, 0.9122344282513259, 0.9639719272779138,
      0.9931285991850949};
  static const double weights[10] = {
      0.1527533871307258, 0.1491729864726037, 0.1420961093183820,
      0.1316886384491766, 0.1181945319615184, 0.1019301198172404,
      0.0832767415767048, 0.0626720483341091, 0.0406014298003869,
      0.0176140071391521};
  if (x < 0) return -erf_quadrature(-x);
  const int panels = 8;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = x * p / panels;
    const double b = x * (p + 1) / panels;
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (int k = 0; k < 10; ++k) {
      const double t1 = mid + half * nodes[k];
      const double t2 = mid - half * nodes[k];
      sum += half * weights[k] * (std::exp(-t1 * t1) + std::exp(-t2 * t2));
    }
  }
  return sum * 2.0 / std::sqrt(M_PI);
}

// Standard normal CDF through the quadrature oracle.
inline double normal_cdf_quadrature(double z) {
  return 0.5 * (1.0 + erf_quadrature(z / std::sqrt(2.0)));
}

// ---------------------------------------------------------------------------
// Random parameterized models over binary nodes (C first, S last, direct edge
// always present; other forward edges Bernoulli(1/2)).
// ---------------------------------------------------------------------------

inline fairrank::CausalModel random_binary_model(std::mt19937& rng,
                                                 int profile_nodes) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> prob(0.05, 0.95);
  std::uniform_real_distribution<double> mu_dist(0.2, 2.0);
  std::uniform_real_distribution<double> sigma_dist(0.2, 1.5);

  std::vector<fairrank::GraphNode> nodes;
  nodes.push_back({"c", fairrank::NodeKind::Protected});
  for (int i = 0; i < profile_nodes; ++i) {
    nodes.push_back({"z" + std::to_string(i + 1), fairrank::NodeKind::Profile});
  }
  nodes.push_back({"s", fairrank::NodeKind::Score});

  std::vector<std::pair<std::string, std::string>> edges;
  const std::size_t n = nodes.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool direct = (i == 0 && j == n - 1);
      if (direct || unit(rng) < 0.5) {
        edges.emplace_back(nodes[i].name, nodes[j].name);
      }
    }
  }
  fairrank::CausalGraph graph(nodes, edges);

  fairrank::CausalModel model{graph, {}, {}, {}};
  model.domains.resize(n);
  model.cpts.resize(n);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    model.domains[i] = {"0", "1"};
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const int node = static_cast<int>(i);
    fairrank::Cpt cpt;
    cpt.node = graph.name(node);
    cpt.smoothing = 0.0;
    std::vector<int> parents = graph.parents(node);
    std::sort(parents.begin(), parents.end(), [&](int a, int b) {
      return graph.name(a) < graph.name(b);
    });
    for (int p : parents) cpt.parent_order.push_back(graph.name(p));
    const std::size_t nrows = std::size_t{1} << parents.size();
    for (std::size_t r = 0; r < nrows; ++r) {
      const double p1 = prob(rng);
      cpt.rows.push_back({1.0 - p1, p1});
    }
    model.cpts[i] = std::move(cpt);
  }
  model.cg.parent_order.push_back("c");
  for (int qn : model.q_nodes()) model.cg.parent_order.push_back(graph.name(qn));
  const std::size_t qc = model.q_config_count();
  for (std::size_t k = 0; k < 2 * qc; ++k) {
    model.cg.entries.push_back({mu_dist(rng), sigma_dist(rng)});
  }
  fairrank::validate_model(model);
  return model;
}

// ---------------------------------------------------------------------------
// Independent path-specific-effect oracle: own path enumeration, own child
// classification, own full-joint enumeration.
// ---------------------------------------------------------------------------

inline void dfs_paths(const fairrank::CausalGraph& g, int v,
                      std::vector<int>& stack,
                      std::vector<std::vector<int>>& out) {
  if (v == g.score_node()) {
    out.push_back(stack);
    return;
  }
  for (int w : g.children(v)) {
    stack.push_back(w);
    dfs_paths(g, w, stack, out);
    stack.pop_back();
  }
}

// E[S] of the joint where node `v`'s CPT reads C = c_sub[v] and the CG lookup
// uses c_score. Enumerates every assignment of all discrete non-C nodes.
inline double substituted_expectation(const fairrank::CausalModel& model,
                                      const std::vector<int>& c_sub,
                                      int c_score) {
  const auto& g = model.graph;
  std::vector<int> zs;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const int v = static_cast<int>(i);
    if (v != g.protected_node() && v != g.score_node()) zs.push_back(v);
  }
  std::size_t total = 1;
  for (int v : zs) total *= static_cast<std::size_t>(model.domain_size(v));

  const auto q = model.q_nodes();
  double expectation = 0.0;
  std::vector<int> assign(g.node_count(), 0);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t rem = code;
    for (std::size_t k = zs.size(); k-- > 0;) {
      const auto d = static_cast<std::size_t>(model.domain_size(zs[k]));
      assign[static_cast<std::size_t>(zs[k])] = static_cast<int>(rem % d);
      rem /= d;
    }
    double w = 1.0;
    for (int v : zs) {
      assign[static_cast<std::size_t>(g.protected_node())] =
          c_sub[static_cast<std::size_t>(v)];
      w *= model.cpt_prob(v, assign[static_cast<std::size_t>(v)], assign);
    }
    std::vector<int> q_codes(q.size());
    for (std::size_t k = 0; k < q.size(); ++k) {
      q_codes[k] = assign[static_cast<std::size_t>(q[k])];
    }
    expectation += model.cg_entry(c_score, model.q_index(q_codes)).mu * w;
  }
  return expectation;
}

// Oracle for SE_pi(from, to) given an explicit path set. Throws std::runtime
// error (plain) on a recanting witness so tests can distinguish.
inline double pse_oracle(const fairrank::CausalModel& model,
                         const std::vector<std::vector<int>>& pi_paths,
                         int from, int to) {
  const auto& g = model.graph;
  std::vector<std::vector<int>> all;
  std::vector<int> stack{g.protected_node()};
  dfs_paths(g, g.protected_node(), stack, all);
  std::set<std::vector<int>> pi_set(pi_paths.begin(), pi_paths.end());

  std::vector<int> c_sub(g.node_count(), to);
  for (int child : g.children(g.protected_node())) {
    if (child == g.score_node()) continue;
    bool inside = false, outside = false;
    for (const auto& p : all) {
      if (p[1] != child) continue;
      (pi_set.count(p) ? inside : outside) = true;
    }
    if (inside && outside) throw std::runtime_error("recanting witness");
    if (inside) c_sub[static_cast<std::size_t>(child)] = from;
  }
  bool direct_in_pi = false;
  for (const auto& p : pi_paths) {
    if (p.size() == 2) direct_in_pi = true;
  }
  const int c_score = direct_in_pi ? from : to;
  return substituted_expectation(model, c_sub, c_score) -
         substituted_expectation(model, std::vector<int>(g.node_count(), to), to);
}

// ---------------------------------------------------------------------------
// Brute-force rank distances.
// ---------------------------------------------------------------------------

inline std::int64_t ktd_brute(const std::vector<int>& r1,
                              const std::vector<int>& r2) {
  std::int64_t inv = 0;
  for (std::size_t i = 0; i < r1.size(); ++i) {
    for (std::size_t j = i + 1; j < r1.size(); ++j) {
      const bool a = r1[i] < r1[j];
      const bool b = r2[i] < r2[j];
      if (a != b) ++inv;
    }
  }
  return inv;
}

inline std::int64_t sfd_brute(const std::vector<int>& r1,
                              const std::vector<int>& r2) {
  std::int64_t s = 0;
  for (std::size_t i = 0; i < r1.size(); ++i) {
    s += std::llabs(static_cast<long long>(r1[i]) - r2[i]);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Exact QP oracle: exhaustively tries every subset of constraints as the
// active set, solves the equality-constrained problem, and keeps the best
// KKT-valid candidate. Independent of the library's active-set iteration.
// ---------------------------------------------------------------------------

inline bool gauss_solve(std::vector<std::vector<double>> m,
                        std::vector<double> rhs, std::vector<double>& out) {
  const std::size_t k = rhs.size();
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < k; ++r) {
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    }
    if (std::abs(m[piv][c]) < 1e-13) return false;
    std::swap(m[c], m[piv]);
    std::swap(rhs[c], rhs[piv]);
    for (std::size_t r = c + 1; r < k; ++r) {
      const double f = m[r][c] / m[c][c];
      for (std::size_t cc = c; cc < k; ++cc) m[r][cc] -= f * m[c][cc];
      rhs[r] -= f * rhs[c];
    }
  }
  out.assign(k, 0.0);
  for (std::size_t r = k; r-- > 0;) {
    double v = rhs[r];
    for (std::size_t c = r + 1; c < k; ++c) v -= m[r][c] * out[c];
    out[r] = v / m[r][r];
  }
  return true;
}

inline double qp_oracle_objective(const fairrank::RepairQp& qp) {
  const std::size_t n = qp.target.size();
  const std::size_t m = qp.constraints.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    std::vector<std::size_t> act;
    for (std::size_t i = 0; i < m; ++i) {
      if (mask & (1u << i)) act.push_back(i);
    }
    const std::size_t k = act.size();
    std::vector<double> lam;
    if (k > 0) {
      std::vector<std::vector<double>> mat(k, std::vector<double>(k, 0.0));
      std::vector<double> rhs(k, 0.0);
      for (std::size_t i = 0; i < k; ++i) {
        const auto& ai = qp.constraints[act[i]].a;
        for (std::size_t j = 0; j < k; ++j) {
          const auto& aj = qp.constraints[act[j]].a;
          double v = 0;
          for (std::size_t t = 0; t < n; ++t) v += ai[t] * aj[t] / qp.weights[t];
          mat[i][j] = v;
        }
        double at = 0;
        for (std::size_t t = 0; t < n; ++t) at += ai[t] * qp.target[t];
        rhs[i] = 2.0 * (at - qp.constraints[act[i]].b);
      }
      if (!gauss_solve(std::move(mat), std::move(rhs), lam)) continue;
    }
    std::vector<double> x = qp.target;
    for (std::size_t i = 0; i < k; ++i) {
      if (lam[i] < -1e-10) goto next_mask;  // dual infeasible
      const auto& ai = qp.constraints[act[i]].a;
      for (std::size_t t = 0; t < n; ++t) {
        x[t] -= 0.5 * ai[t] * lam[i] / qp.weights[t];
      }
    }
    {
      bool feasible = true;
      for (std::size_t i = 0; i < m; ++i) {
        double g = -qp.constraints[i].b;
        for (std::size_t t = 0; t < n; ++t) g += qp.constraints[i].a[t] * x[t];
        if (g > 1e-9) {
          feasible = false;
          break;
        }
      }
      if (feasible) {
        double obj = 0;
        for (std::size_t t = 0; t < n; ++t) {
          const double d = x[t] - qp.target[t];
          obj += qp.weights[t] * d * d;
        }
        best = std::min(best, obj);
      }
    }
  next_mask:;
  }
  return best;
}

// Random search over feasible perturbations; returns the best objective found
// (never better than the true optimum by more than numerical noise).
inline double qp_random_feasible_search(const fairrank::RepairQp& qp,
                                        const std::vector<double>& center,
                                        int samples, std::mt19937& rng) {
  const std::size_t n = qp.target.size();
  std::normal_distribution<double> step(0.0, 0.05);
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> x(n);
  for (int s = 0; s < samples; ++s) {
    for (std::size_t t = 0; t < n; ++t) x[t] = center[t] + step(rng);
    bool feasible = true;
    for (const auto& con : qp.constraints) {
      double g = -con.b;
      for (std::size_t t = 0; t < n; ++t) g += con.a[t] * x[t];
      if (g > 0) {
        feasible = false;
        break;
      }
    }
    if (!feasible) continue;
    double obj = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const double d = x[t] - qp.target[t];
      obj += qp.weights[t] * d * d;
    }
    best = std::min(best, obj);
  }
  return best;
}

}  // namespace oracles
