#pragma once

#include "fairrank/dataset.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fairrank {

enum class NodeKind { Protected, Profile, Score };

struct GraphNode {
  std::string name;
  NodeKind kind;

  bool operator==(const GraphNode&) const = default;
};

// DAG over one protected node C, profile nodes Z, and one score node S.
// Structural assumptions enforced at construction: C has no parent, S has no
// child, the graph is acyclic. Immutable afterwards.
class CausalGraph {
 public:
  CausalGraph(std::vector<GraphNode> nodes,
              std::vector<std::pair<std::string, std::string>> edges);

  std::size_t node_count() const { return nodes_.size(); }
  const std::vector<GraphNode>& nodes() const { return nodes_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  int node_index(const std::string& name) const;  // throws if absent
  const std::string& name(int node) const {
    return nodes_[static_cast<std::size_t>(node)].name;
  }
  NodeKind kind(int node) const {
    return nodes_[static_cast<std::size_t>(node)].kind;
  }

  int protected_node() const { return protected_node_; }
  int score_node() const { return score_node_; }

  bool has_edge(int from, int to) const;
  const std::vector<int>& parents(int node) const {
    return parents_[static_cast<std::size_t>(node)];
  }
  const std::vector<int>& children(int node) const {
    return children_[static_cast<std::size_t>(node)];
  }

  bool operator==(const CausalGraph&) const = default;

 private:
  std::vector<GraphNode> nodes_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> parents_;   // sorted
  std::vector<std::vector<int>> children_;  // sorted
  int protected_node_ = -1;
  int score_node_ = -1;
};

// Node names in an order where every edge goes forward and the score node is
// last. Deterministic: ties resolved by node name, score node deferred.
std::vector<std::string> topological_order(const CausalGraph& graph);

// Conditional probability table of one discrete node. Rows are indexed by the
// mixed-radix code of the parent assignment (parents in parent_order, the
// rightmost parent varying fastest); each row is a distribution over the
// node's domain and sums to 1.
struct Cpt {
  std::string node;
  std::vector<std::string> parent_order;  // sorted by name
  std::vector<std::vector<double>> rows;
  double smoothing = 1.0;  // Laplace alpha used during estimation

  bool operator==(const Cpt&) const = default;
};

struct CgEntry {
  double mu = 0.0;
  double sigma = 1.0;

  bool operator==(const CgEntry&) const = default;
};

// Conditional Gaussian table for the score node: one (mu, sigma) per value
// assignment of Pa(S), addressed as (c, q) with C first and the Q attributes
// in sorted name order. Entries cover the full domain product.
struct CgTable {
  std::vector<std::string> parent_order;  // C first, then Q sorted by name
  std::vector<CgEntry> entries;           // mixed-radix over parent_order
  int min_count = 5;                      // stratum-size threshold at estimation

  bool operator==(const CgTable&) const = default;
};

// Parameterized mixed-variable causal model. `domains` is aligned with
// graph.nodes(); the score node's domain is empty. `cpts` holds one table per
// discrete node in graph node order (score node position left empty).
struct CausalModel {
  CausalGraph graph;
  std::vector<std::vector<std::string>> domains;
  std::vector<Cpt> cpts;
  CgTable cg;

  int domain_size(int node) const {
    return static_cast<int>(domains[static_cast<std::size_t>(node)].size());
  }
  int value_code(int node, const std::string& value) const;  // throws if absent

  // Q = Pa(S) \ {C} as node indices, sorted by node name (the canonical
  // stratum order used everywhere, including serialized keys).
  std::vector<int> q_nodes() const;
  // Number of Q value assignments (product of Q domain sizes).
  std::size_t q_config_count() const;
  // Mixed-radix index of a Q assignment given codes aligned with q_nodes().
  std::size_t q_index(const std::vector<int>& q_codes) const;
  // CG entry index for (c, q).
  std::size_t cg_index(int c_code, std::size_t q_idx) const;
  const CgEntry& cg_entry(int c_code, std::size_t q_idx) const {
    return cg.entries[cg_index(c_code, q_idx)];
  }

  // P(value | parent assignment) read from the node's CPT; `assignment` holds
  // a value code for every discrete node (score node position ignored).
  double cpt_prob(int node, int value, const std::vector<int>& assignment) const;

  // Canonical stratum key, e.g. "age=young|housing=own,job=skilled". The part
  // before '|' is the protected attribute; Q attributes follow in sorted name
  // order. This exact format is the serialized interface; see save_graph_file.
  std::string cg_key(int c_code, std::size_t q_idx) const;

  bool operator==(const CausalModel&) const = default;
};

// Checks structural coverage and numeric invariants (CPT rows sum to 1 within
// 1e-9, sigma > 0, entry counts match domain products). Throws ValidationError.
void validate_model(const CausalModel& model);

// Maximum-likelihood parameter estimation with Laplace-smoothed CPTs and a
// per-stratum Gaussian for the score. Strata with fewer than min_count rows
// back off: mu to the same-q mean pooled over both protected values, sigma to
// the pooled standard deviation, then to the global statistics; sigma is
// always floored at 1e-3.
CausalModel estimate_parameters(const RankedDataset& data,
                                const ScoreAssignment& scores,
                                const CausalGraph& graph, double smoothing,
                                int min_count);

struct GraphFile {
  CausalGraph graph;
  std::optional<CausalModel> model;  // present when the JSON carries "params"
};

// JSON round trip. Saving emits a canonical form (sorted nodes/edges/keys,
// doubles at 12 significant digits) so load-save of a canonical file is
// byte-identical. Structural assumptions are validated on load.
GraphFile load_graph_file(const std::string& path);
void save_graph_file(const std::string& path, const CausalGraph& graph,
                     const std::optional<CausalModel>& model = std::nullopt);

}  // namespace fairrank
