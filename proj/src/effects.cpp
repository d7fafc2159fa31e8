#include "fairrank/effects.hpp"

#include "fairrank/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace fairrank {

namespace {

constexpr std::size_t kEnumerationGuard = 1000000;
constexpr std::size_t kPathGuard = 100000;

void enumerate_paths(const CausalGraph& graph, int node, std::vector<int>& stack,
                     std::vector<std::vector<int>>& out) {
  if (node == graph.score_node()) {
    if (out.size() >= kPathGuard) {
      throw ValidationError("effects", "too many causal paths to enumerate");
    }
    out.push_back(stack);
    return;
  }
  for (int child : graph.children(node)) {
    stack.push_back(child);
    enumerate_paths(graph, child, stack, out);
    stack.pop_back();
  }
}

std::vector<std::vector<int>> all_causal_paths(const CausalGraph& graph) {
  std::vector<std::vector<int>> out;
  std::vector<int> stack{graph.protected_node()};
  enumerate_paths(graph, graph.protected_node(), stack, out);
  return out;
}

void validate_path_set(const CausalGraph& graph, const PathSet& pi) {
  for (const auto& path : pi.paths) {
    if (path.size() < 2 || path.front() != graph.protected_node() ||
        path.back() != graph.score_node()) {
      throw ValidationError("effects", "path must run from C to S");
    }
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
      if (!graph.has_edge(path[k], path[k + 1])) {
        throw ValidationError("effects", "path uses a non-existent edge");
      }
    }
  }
  if (pi.kind == PathKind::Direct) {
    if (pi.paths.size() != 1 || pi.paths[0].size() != 2) {
      throw ValidationError("effects", "direct path set must be exactly {C->S}");
    }
  }
}

bool is_direct(const std::vector<int>& path) { return path.size() == 2; }

bool contains_direct_edge(const PathSet& pi) {
  return std::any_of(pi.paths.begin(), pi.paths.end(), is_direct);
}

// Discrete, non-protected nodes in graph order. These are the enumeration
// variables Z of the truncated factorization.
std::vector<int> z_nodes(const CausalModel& model) {
  std::vector<int> z;
  for (std::size_t i = 0; i < model.graph.node_count(); ++i) {
    const int node = static_cast<int>(i);
    if (node != model.graph.score_node() && node != model.graph.protected_node()) {
      z.push_back(node);
    }
  }
  return z;
}

std::size_t z_config_count(const CausalModel& model, const std::vector<int>& z) {
  std::size_t count = 1;
  for (int node : z) {
    count *= static_cast<std::size_t>(model.domain_size(node));
    if (count > kEnumerationGuard) {
      throw ValidationError("effects",
                            "discrete joint exceeds the enumeration guard (1e6)");
    }
  }
  return count;
}

// Walks every assignment of the Z nodes. The callback receives the full
// per-node assignment vector (protected node filled by the caller) and the
// product of the Z-node CPT factors; `c_for_node[v]` chooses which protected
// value each node's CPT row is read with.
template <typename F>
void for_each_z_config(const CausalModel& model, const std::vector<int>& z,
                       const std::vector<int>& c_for_node, F&& callback) {
  const std::size_t total = z_config_count(model, z);
  std::vector<int> assign(model.graph.node_count(), 0);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t rem = code;
    for (std::size_t k = z.size(); k-- > 0;) {
      const std::size_t d = static_cast<std::size_t>(model.domain_size(z[k]));
      assign[static_cast<std::size_t>(z[k])] = static_cast<int>(rem % d);
      rem /= d;
    }
    double prob = 1.0;
    for (int node : z) {
      assign[static_cast<std::size_t>(model.graph.protected_node())] =
          c_for_node[static_cast<std::size_t>(node)];
      prob *= model.cpt_prob(node, assign[static_cast<std::size_t>(node)], assign);
    }
    callback(assign, prob);
  }
}

// P(q | c) under per-node substitution of the protected value. With all
// entries of c_for_node equal to c this is the plain conditional P(q | C=c).
std::vector<double> q_distribution_substituted(const CausalModel& model,
                                               const std::vector<int>& c_for_node) {
  const auto z = z_nodes(model);
  const auto q = model.q_nodes();
  std::vector<double> dist(model.q_config_count(), 0.0);
  std::vector<int> q_codes(q.size(), 0);
  for_each_z_config(model, z, c_for_node,
                    [&](const std::vector<int>& assign, double prob) {
                      for (std::size_t k = 0; k < q.size(); ++k) {
                        q_codes[k] = assign[static_cast<std::size_t>(q[k])];
                      }
                      dist[model.q_index(q_codes)] += prob;
                    });
  return dist;
}

std::vector<int> uniform_substitution(const CausalModel& model, int c_code) {
  return std::vector<int>(model.graph.node_count(), c_code);
}

void require_parameterized(const CausalModel& model) {
  if (model.cg.entries.empty()) {
    throw ValidationError("effects", "model has no CG parameters");
  }
}

}  // namespace

PathSet direct_path_set(const CausalGraph& graph) {
  if (!graph.has_edge(graph.protected_node(), graph.score_node())) {
    throw ValidationError("effects", "graph has no direct edge C -> S");
  }
  PathSet pi;
  pi.kind = PathKind::Direct;
  pi.paths = {{graph.protected_node(), graph.score_node()}};
  return pi;
}

PathSet all_indirect_path_set(const CausalGraph& graph) {
  PathSet pi;
  pi.kind = PathKind::AllIndirect;
  for (auto& path : all_causal_paths(graph)) {
    if (!is_direct(path)) pi.paths.push_back(std::move(path));
  }
  return pi;
}

PathSet redlining_path_set(const CausalGraph& graph,
                           const std::vector<std::string>& redlining) {
  std::set<int> red;
  for (const auto& name : redlining) {
    const int node = graph.node_index(name);
    if (graph.kind(node) != NodeKind::Profile) {
      throw ValidationError("effects",
                            "redlining attribute '" + name + "' is not a profile node");
    }
    red.insert(node);
  }
  PathSet pi;
  pi.kind = PathKind::IndirectViaRedlining;
  for (auto& path : all_causal_paths(graph)) {
    if (is_direct(path)) continue;
    const bool through_r =
        std::any_of(path.begin() + 1, path.end() - 1,
                    [&](int v) { return red.count(v) > 0; });
    if (through_r) pi.paths.push_back(std::move(path));
  }
  return pi;
}

ChildPartition partition_children(const CausalGraph& graph, const PathSet& pi) {
  validate_path_set(graph, pi);

  // First edges of pi paths and of non-pi causal paths.
  std::set<std::vector<int>> pi_set(pi.paths.begin(), pi.paths.end());
  std::set<int> on_pi, on_non_pi;
  for (const auto& path : pi.paths) {
    if (!is_direct(path)) on_pi.insert(path[1]);
  }
  for (const auto& path : all_causal_paths(graph)) {
    if (is_direct(path) || pi_set.count(path)) continue;
    on_non_pi.insert(path[1]);
  }

  ChildPartition part;
  for (int child : graph.children(graph.protected_node())) {
    if (child == graph.score_node()) continue;
    const bool in_pi = on_pi.count(child) > 0;
    const bool in_non_pi = on_non_pi.count(child) > 0;
    if (in_pi && in_non_pi) {
      throw UnidentifiableError(
          "effects",
          "recanting witness at '" + graph.name(child) +
              "': C->" + graph.name(child) +
              " starts both a path inside and a causal path outside the "
              "chosen path set, so the path-specific effect is not "
              "identifiable from data");
    }
    if (in_pi) {
      part.v_pi.push_back(child);
    } else {
      part.v_bar.push_back(child);
    }
  }
  return part;
}

std::vector<double> q_distribution(const CausalModel& model, int c_code) {
  require_parameterized(model);
  return q_distribution_substituted(model, uniform_substitution(model, c_code));
}

double brute_force_intervention(const CausalModel& model,
                                const std::string& c_value) {
  require_parameterized(model);
  const int c = model.value_code(model.graph.protected_node(), c_value);
  const auto z = z_nodes(model);
  const auto q = model.q_nodes();
  double expectation = 0.0;
  std::vector<int> q_codes(q.size(), 0);
  for_each_z_config(model, z, uniform_substitution(model, c),
                    [&](const std::vector<int>& assign, double prob) {
                      for (std::size_t k = 0; k < q.size(); ++k) {
                        q_codes[k] = assign[static_cast<std::size_t>(q[k])];
                      }
                      expectation +=
                          model.cg_entry(c, model.q_index(q_codes)).mu * prob;
                    });
  return expectation;
}

double mean_score_given(const CausalModel& model, const std::string& c_value) {
  require_parameterized(model);
  const int c = model.value_code(model.graph.protected_node(), c_value);
  const auto p = q_distribution(model, c);
  double mean = 0.0;
  for (std::size_t qi = 0; qi < p.size(); ++qi) {
    mean += model.cg_entry(c, qi).mu * p[qi];
  }
  return mean;
}

double total_effect(const CausalModel& model, const std::string& from_value,
                    const std::string& to_value) {
  require_parameterized(model);
  const int from = model.value_code(model.graph.protected_node(), from_value);
  const int to = model.value_code(model.graph.protected_node(), to_value);
  const auto p_from = q_distribution(model, from);
  const auto p_to = q_distribution(model, to);
  double effect = 0.0;
  for (std::size_t qi = 0; qi < p_from.size(); ++qi) {
    effect += model.cg_entry(from, qi).mu * p_from[qi] -
              model.cg_entry(to, qi).mu * p_to[qi];
  }
  return effect;
}

double path_specific_effect(const CausalModel& model, const PathSet& pi,
                            const std::string& from_value,
                            const std::string& to_value) {
  require_parameterized(model);
  const int from = model.value_code(model.graph.protected_node(), from_value);
  const int to = model.value_code(model.graph.protected_node(), to_value);
  const auto p_to = q_distribution(model, to);

  if (pi.kind == PathKind::Direct) {
    validate_path_set(model.graph, pi);
    double effect = 0.0;
    for (std::size_t qi = 0; qi < p_to.size(); ++qi) {
      effect += (model.cg_entry(from, qi).mu - model.cg_entry(to, qi).mu) * p_to[qi];
    }
    return effect;
  }

  const ChildPartition part = partition_children(model.graph, pi);
  std::vector<int> c_for_node = uniform_substitution(model, to);
  for (int v : part.v_pi) c_for_node[static_cast<std::size_t>(v)] = from;
  const int c_for_score = contains_direct_edge(pi) ? from : to;

  const auto p_sub = q_distribution_substituted(model, c_for_node);
  double effect = 0.0;
  for (std::size_t qi = 0; qi < p_sub.size(); ++qi) {
    effect += model.cg_entry(c_for_score, qi).mu * p_sub[qi] -
              model.cg_entry(to, qi).mu * p_to[qi];
  }
  return effect;
}

std::vector<double> path_effect_coefficients(const CausalModel& model,
                                             const PathSet& pi,
                                             const std::string& from_value,
                                             const std::string& to_value) {
  require_parameterized(model);
  const int from = model.value_code(model.graph.protected_node(), from_value);
  const int to = model.value_code(model.graph.protected_node(), to_value);
  const auto p_to = q_distribution(model, to);
  std::vector<double> coef(model.cg.entries.size(), 0.0);

  if (pi.kind == PathKind::Direct) {
    validate_path_set(model.graph, pi);
    for (std::size_t qi = 0; qi < p_to.size(); ++qi) {
      coef[model.cg_index(from, qi)] += p_to[qi];
      coef[model.cg_index(to, qi)] -= p_to[qi];
    }
    return coef;
  }

  const ChildPartition part = partition_children(model.graph, pi);
  std::vector<int> c_for_node = uniform_substitution(model, to);
  for (int v : part.v_pi) c_for_node[static_cast<std::size_t>(v)] = from;
  const int c_for_score = contains_direct_edge(pi) ? from : to;
  const auto p_sub = q_distribution_substituted(model, c_for_node);
  for (std::size_t qi = 0; qi < p_sub.size(); ++qi) {
    coef[model.cg_index(c_for_score, qi)] += p_sub[qi];
    coef[model.cg_index(to, qi)] -= p_to[qi];
  }
  return coef;
}

std::vector<double> mean_score_coefficients(const CausalModel& model,
                                            const std::string& c_value) {
  require_parameterized(model);
  const int c = model.value_code(model.graph.protected_node(), c_value);
  const auto p = q_distribution(model, c);
  std::vector<double> coef(model.cg.entries.size(), 0.0);
  for (std::size_t qi = 0; qi < p.size(); ++qi) {
    coef[model.cg_index(c, qi)] = p[qi];
  }
  return coef;
}

EffectReport fdetect(const CausalModel& model, const PathSet& indirect_paths,
                     const std::string& favorable_value, double tau) {
  if (tau < 0) {
    throw ValidationError("effects", "tau must be nonnegative");
  }
  require_parameterized(model);
  const int c_node = model.graph.protected_node();
  const int fav = model.value_code(c_node, favorable_value);
  const std::string& fav_value = model.domains[static_cast<std::size_t>(c_node)]
                                              [static_cast<std::size_t>(fav)];
  const std::string& unfav_value = model.domains[static_cast<std::size_t>(c_node)]
                                                [static_cast<std::size_t>(1 - fav)];

  EffectReport report;
  report.tau = tau;
  report.te_fwd = total_effect(model, fav_value, unfav_value);
  report.te_rev = total_effect(model, unfav_value, fav_value);
  if (model.graph.has_edge(c_node, model.graph.score_node())) {
    const PathSet pi_d = direct_path_set(model.graph);
    report.se_d_fwd = path_specific_effect(model, pi_d, fav_value, unfav_value);
    report.se_d_rev = path_specific_effect(model, pi_d, unfav_value, fav_value);
  }  // no direct edge: the pi_d-specific effect is identically zero
  report.se_i_fwd = path_specific_effect(model, indirect_paths, fav_value, unfav_value);
  report.se_i_rev = path_specific_effect(model, indirect_paths, unfav_value, fav_value);

  report.mean_score_favorable = mean_score_given(model, fav_value);
  if (!(report.mean_score_favorable > 0)) {
    throw ValidationError(
        "effects", "non-positive baseline E[S|c+]; the relative DE measures "
                   "are undefined (check the score gauge anchor)");
  }
  report.de_d_fwd = report.se_d_fwd / report.mean_score_favorable;
  report.de_d_rev = report.se_d_rev / report.mean_score_favorable;
  report.de_i_fwd = report.se_i_fwd / report.mean_score_favorable;
  report.de_i_rev = report.se_i_rev / report.mean_score_favorable;
  report.judge_d = report.de_d_fwd > tau || report.de_d_rev > tau;
  report.judge_i = report.de_i_fwd > tau || report.de_i_rev > tau;
  return report;
}

}  // namespace fairrank
