#include "fairrank/graph.hpp"

#include "fairrank/errors.hpp"
#include "fairrank/jsonio.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace fairrank {

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw ValidationError("graph", msg);
}

}  // namespace

CausalGraph::CausalGraph(std::vector<GraphNode> nodes,
                         std::vector<std::pair<std::string, std::string>> edges)
    : nodes_(std::move(nodes)) {
  std::set<std::string> names;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& nd = nodes_[i];
    if (nd.name.empty()) fail("empty node name");
    if (!names.insert(nd.name).second) fail("duplicate node '" + nd.name + "'");
    if (nd.kind == NodeKind::Protected) {
      if (protected_node_ >= 0) fail("more than one protected node");
      protected_node_ = static_cast<int>(i);
    } else if (nd.kind == NodeKind::Score) {
      if (score_node_ >= 0) fail("more than one score node");
      score_node_ = static_cast<int>(i);
    }
  }
  if (protected_node_ < 0) fail("no protected node");
  if (score_node_ < 0) fail("no score node");

  parents_.resize(nodes_.size());
  children_.resize(nodes_.size());
  std::set<std::pair<int, int>> edge_set;
  for (const auto& [from_name, to_name] : edges) {
    const int from = node_index(from_name);
    const int to = node_index(to_name);
    if (from == to) fail("self-loop on '" + from_name + "'");
    if (!edge_set.insert({from, to}).second) {
      fail("duplicate edge " + from_name + " -> " + to_name);
    }
    if (to == protected_node_) {
      fail("edge into the protected node '" + to_name +
           "': the protected attribute has no parent");
    }
    if (from == score_node_) {
      fail("edge out of the score node '" + from_name +
           "': the score has no child");
    }
  }
  edges_.assign(edge_set.begin(), edge_set.end());
  for (const auto& [from, to] : edges_) {
    parents_[static_cast<std::size_t>(to)].push_back(from);
    children_[static_cast<std::size_t>(from)].push_back(to);
  }
  for (auto& p : parents_) std::sort(p.begin(), p.end());
  for (auto& c : children_) std::sort(c.begin(), c.end());

  // Acyclicity: Kahn's algorithm must consume every node.
  std::vector<int> indeg(nodes_.size(), 0);
  for (const auto& [from, to] : edges_) indeg[static_cast<std::size_t>(to)]++;
  std::vector<int> queue;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (indeg[i] == 0) queue.push_back(static_cast<int>(i));
  }
  std::size_t consumed = 0;
  while (!queue.empty()) {
    const int v = queue.back();
    queue.pop_back();
    ++consumed;
    for (int c : children_[static_cast<std::size_t>(v)]) {
      if (--indeg[static_cast<std::size_t>(c)] == 0) queue.push_back(c);
    }
  }
  if (consumed != nodes_.size()) fail("cycle detected");
}

int CausalGraph::node_index(const std::string& name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].name == name) return static_cast<int>(i);
  }
  fail("unknown node '" + name + "'");
}

bool CausalGraph::has_edge(int from, int to) const {
  const auto& ch = children_[static_cast<std::size_t>(from)];
  return std::binary_search(ch.begin(), ch.end(), to);
}

std::vector<std::string> topological_order(const CausalGraph& graph) {
  const std::size_t n = graph.node_count();
  std::vector<int> indeg(n, 0);
  for (const auto& [from, to] : graph.edges()) {
    indeg[static_cast<std::size_t>(to)]++;
  }
  auto by_name = [&](int a, int b) { return graph.name(a) < graph.name(b); };
  std::vector<int> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (indeg[i] == 0) ready.push_back(static_cast<int>(i));
  }
  std::vector<std::string> order;
  order.reserve(n);
  while (!ready.empty()) {
    // Pick the lexicographically smallest ready node, deferring the score
    // node so it always lands last.
    std::sort(ready.begin(), ready.end(), by_name);
    int pick = -1;
    for (int v : ready) {
      if (v != graph.score_node()) {
        pick = v;
        break;
      }
    }
    if (pick < 0) pick = ready.front();  // only the score node remains
    ready.erase(std::find(ready.begin(), ready.end(), pick));
    order.push_back(graph.name(pick));
    for (int c : graph.children(pick)) {
      if (--indeg[static_cast<std::size_t>(c)] == 0) ready.push_back(c);
    }
  }
  if (order.size() != n) fail("cycle detected");
  return order;
}

// ---------------------------------------------------------------------------
// CausalModel lookups
// ---------------------------------------------------------------------------

int CausalModel::value_code(int node, const std::string& value) const {
  const auto& dom = domains[static_cast<std::size_t>(node)];
  auto it = std::find(dom.begin(), dom.end(), value);
  if (it == dom.end()) {
    fail("value '" + value + "' not in domain of '" + graph.name(node) + "'");
  }
  return static_cast<int>(it - dom.begin());
}

std::vector<int> CausalModel::q_nodes() const {
  std::vector<int> q = graph.parents(graph.score_node());
  q.erase(std::remove(q.begin(), q.end(), graph.protected_node()), q.end());
  std::sort(q.begin(), q.end(), [&](int a, int b) {
    return graph.name(a) < graph.name(b);
  });
  return q;
}

std::size_t CausalModel::q_config_count() const {
  std::size_t count = 1;
  for (int node : q_nodes()) {
    count *= static_cast<std::size_t>(domain_size(node));
  }
  return count;
}

std::size_t CausalModel::q_index(const std::vector<int>& q_codes) const {
  const auto q = q_nodes();
  std::size_t idx = 0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    idx = idx * static_cast<std::size_t>(domain_size(q[k])) +
          static_cast<std::size_t>(q_codes[k]);
  }
  return idx;
}

std::size_t CausalModel::cg_index(int c_code, std::size_t q_idx) const {
  return static_cast<std::size_t>(c_code) * q_config_count() + q_idx;
}

double CausalModel::cpt_prob(int node, int value,
                             const std::vector<int>& assignment) const {
  const Cpt& cpt = cpts[static_cast<std::size_t>(node)];
  std::size_t row = 0;
  for (const auto& pname : cpt.parent_order) {
    const int p = graph.node_index(pname);
    row = row * static_cast<std::size_t>(domain_size(p)) +
          static_cast<std::size_t>(assignment[static_cast<std::size_t>(p)]);
  }
  return cpt.rows[row][static_cast<std::size_t>(value)];
}

std::string CausalModel::cg_key(int c_code, std::size_t q_idx) const {
  const int c = graph.protected_node();
  std::string key = graph.name(c) + "=" +
                    domains[static_cast<std::size_t>(c)][static_cast<std::size_t>(c_code)] +
                    "|";
  const auto q = q_nodes();
  // Decode q_idx back into per-attribute codes (rightmost fastest).
  std::vector<int> codes(q.size(), 0);
  std::size_t rem = q_idx;
  for (std::size_t k = q.size(); k-- > 0;) {
    const std::size_t d = static_cast<std::size_t>(domain_size(q[k]));
    codes[k] = static_cast<int>(rem % d);
    rem /= d;
  }
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (k) key += ',';
    key += graph.name(q[k]) + "=" +
           domains[static_cast<std::size_t>(q[k])][static_cast<std::size_t>(codes[k])];
  }
  return key;
}

void validate_model(const CausalModel& model) {
  const auto& g = model.graph;
  if (model.domains.size() != g.node_count() ||
      model.cpts.size() != g.node_count()) {
    fail("model parameter arrays not aligned with graph nodes");
  }
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const int node = static_cast<int>(i);
    if (node == g.score_node()) {
      if (!model.domains[i].empty()) fail("score node must have no domain");
      continue;
    }
    if (model.domains[i].empty()) {
      fail("discrete node '" + g.name(node) + "' has an empty domain");
    }
    const Cpt& cpt = model.cpts[i];
    if (cpt.node != g.name(node)) {
      fail("CPT for '" + cpt.node + "' stored at node '" + g.name(node) + "'");
    }
    // Parent order must be exactly the graph parents, sorted by name.
    std::vector<std::string> expect;
    for (int p : g.parents(node)) expect.push_back(g.name(p));
    std::sort(expect.begin(), expect.end());
    if (cpt.parent_order != expect) {
      fail("CPT parent order for '" + cpt.node + "' does not match the graph");
    }
    std::size_t nrows = 1;
    for (int p : g.parents(node)) {
      nrows *= static_cast<std::size_t>(model.domain_size(p));
    }
    if (cpt.rows.size() != nrows) {
      fail("CPT for '" + cpt.node + "' has " + std::to_string(cpt.rows.size()) +
           " rows, expected " + std::to_string(nrows));
    }
    for (const auto& row : cpt.rows) {
      if (row.size() != model.domains[i].size()) {
        fail("CPT row width mismatch for '" + cpt.node + "'");
      }
      double sum = 0;
      for (double p : row) {
        if (p < 0.0 || p > 1.0) fail("CPT entry outside [0,1] for '" + cpt.node + "'");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        fail("CPT row for '" + cpt.node + "' sums to " + std::to_string(sum));
      }
    }
  }
  if (model.domain_size(g.protected_node()) != 2) {
    fail("protected node must have exactly two domain values");
  }
  // CG table coverage.
  std::vector<std::string> expect_parents{g.name(g.protected_node())};
  for (int qn : model.q_nodes()) expect_parents.push_back(g.name(qn));
  if (model.cg.parent_order != expect_parents) {
    fail("CG parent order must list the protected node then Q sorted by name");
  }
  const std::size_t expected_entries = 2 * model.q_config_count();
  if (model.cg.entries.size() != expected_entries) {
    fail("CG table has " + std::to_string(model.cg.entries.size()) +
         " entries, expected " + std::to_string(expected_entries));
  }
  for (const auto& e : model.cg.entries) {
    if (!(e.sigma > 0) || !std::isfinite(e.sigma) || !std::isfinite(e.mu)) {
      fail("CG entry must have finite mu and sigma > 0");
    }
  }
}

// ---------------------------------------------------------------------------
// Estimation
// ---------------------------------------------------------------------------

namespace {

struct MeanVar {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;  // sum of squared deviations (Welford)

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double sd_unbiased() const {
    return n >= 2 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0;
  }
};

constexpr double kSigmaFloor = 1e-3;

}  // namespace

CausalModel estimate_parameters(const RankedDataset& data,
                                const ScoreAssignment& scores,
                                const CausalGraph& graph, double smoothing,
                                int min_count) {
  if (smoothing < 0) fail("smoothing alpha must be nonnegative");
  if (min_count < 1) fail("min_count must be at least 1");
  if (scores.scores.size() != data.size()) {
    fail("scores are not aligned with the dataset rows");
  }

  CausalModel model{graph, {}, {}, {}};
  model.domains.resize(graph.node_count());
  model.cpts.resize(graph.node_count());

  // Map graph nodes onto dataset columns.
  std::vector<int> col(graph.node_count(), -1);
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    const int node = static_cast<int>(i);
    if (node == graph.score_node()) continue;
    col[i] = data.attribute_index(graph.name(node));
    model.domains[i] = data.attribute_domains()[static_cast<std::size_t>(col[i])];
  }
  if (graph.name(graph.protected_node()) != data.protected_attribute()) {
    fail("graph protected node '" + graph.name(graph.protected_node()) +
         "' differs from the dataset protected attribute '" +
         data.protected_attribute() + "'");
  }

  // CPTs: Laplace-smoothed frequencies per parent configuration.
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    const int node = static_cast<int>(i);
    if (node == graph.score_node()) continue;
    Cpt cpt;
    cpt.node = graph.name(node);
    cpt.smoothing = smoothing;
    std::vector<int> parents = graph.parents(node);
    std::sort(parents.begin(), parents.end(), [&](int a, int b) {
      return graph.name(a) < graph.name(b);
    });
    for (int p : parents) cpt.parent_order.push_back(graph.name(p));

    std::size_t nrows = 1;
    for (int p : parents) nrows *= static_cast<std::size_t>(model.domain_size(p));
    const std::size_t width = model.domains[i].size();
    std::vector<std::vector<double>> counts(nrows, std::vector<double>(width, 0.0));
    for (std::size_t r = 0; r < data.size(); ++r) {
      std::size_t row = 0;
      for (int p : parents) {
        row = row * static_cast<std::size_t>(model.domain_size(p)) +
              static_cast<std::size_t>(
                  data.value_code(r, static_cast<std::size_t>(col[static_cast<std::size_t>(p)])));
      }
      counts[row][static_cast<std::size_t>(
          data.value_code(r, static_cast<std::size_t>(col[i])))] += 1.0;
    }
    cpt.rows.resize(nrows);
    for (std::size_t row = 0; row < nrows; ++row) {
      double total = 0;
      for (double c : counts[row]) total += c;
      const double denom = total + smoothing * static_cast<double>(width);
      if (denom <= 0) {
        fail("node '" + cpt.node + "' has zero observations for a parent "
             "configuration and smoothing alpha is 0");
      }
      cpt.rows[row].resize(width);
      for (std::size_t v = 0; v < width; ++v) {
        cpt.rows[row][v] = (counts[row][v] + smoothing) / denom;
      }
    }
    model.cpts[i] = std::move(cpt);
  }

  // CG table with backoff for sparse strata.
  const int c_node = graph.protected_node();
  const auto q = model.q_nodes();
  const std::size_t q_count = model.q_config_count();
  model.cg.min_count = min_count;
  model.cg.parent_order.push_back(graph.name(c_node));
  for (int qn : q) model.cg.parent_order.push_back(graph.name(qn));

  std::vector<MeanVar> per_stratum(2 * q_count);
  std::vector<MeanVar> per_q(q_count);
  MeanVar global;
  for (std::size_t r = 0; r < data.size(); ++r) {
    std::vector<int> q_codes(q.size());
    for (std::size_t k = 0; k < q.size(); ++k) {
      q_codes[k] = data.value_code(
          r, static_cast<std::size_t>(col[static_cast<std::size_t>(q[k])]));
    }
    const std::size_t qi = model.q_index(q_codes);
    const int c = data.value_code(r, static_cast<std::size_t>(col[static_cast<std::size_t>(c_node)]));
    const double s = scores.scores[r];
    per_stratum[model.cg_index(c, qi)].add(s);
    per_q[qi].add(s);
    global.add(s);
  }

  const double global_sd = global.sd_unbiased();
  // When C is not a parent of S the score distribution conditions on Q alone;
  // both protected values share the pooled stratum so the model stays
  // consistent with the graph (the direct effect is exactly zero).
  const bool split_by_c = graph.has_edge(c_node, graph.score_node());
  model.cg.entries.resize(2 * q_count);
  for (int c = 0; c < 2; ++c) {
    for (std::size_t qi = 0; qi < q_count; ++qi) {
      const MeanVar& st =
          split_by_c ? per_stratum[model.cg_index(c, qi)] : per_q[qi];
      const MeanVar& pool = per_q[qi];
      CgEntry e;
      if (st.n >= static_cast<std::size_t>(min_count) && st.n >= 2) {
        e.mu = st.mean;
        e.sigma = st.sd_unbiased();
      } else if (st.n >= static_cast<std::size_t>(min_count) && st.n == 1) {
        // min_count == 1: the single observation fixes the mean; sigma has no
        // sample estimate and falls to the backoff chain.
        e.mu = st.mean;
        e.sigma = pool.n >= 2 ? pool.sd_unbiased() : global_sd;
      } else {
        e.mu = pool.n >= 1 ? pool.mean : global.mean;
        e.sigma = pool.n >= 2 ? pool.sd_unbiased() : global_sd;
      }
      e.sigma = std::max(e.sigma, kSigmaFloor);
      model.cg.entries[model.cg_index(c, qi)] = e;
    }
  }

  validate_model(model);
  return model;
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

namespace {

NodeKind kind_from_string(const std::string& s) {
  if (s == "protected") return NodeKind::Protected;
  if (s == "profile") return NodeKind::Profile;
  if (s == "score") return NodeKind::Score;
  fail("unknown node kind '" + s + "'");
}

std::string kind_to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Protected: return "protected";
    case NodeKind::Profile: return "profile";
    case NodeKind::Score: return "score";
  }
  fail("bad node kind");
}

// CPT row key: parent assignments joined as "p1=v1,p2=v2" in parent_order
// (already sorted by name); "" for a parentless node.
std::string cpt_row_key(const CausalModel& model, const Cpt& cpt,
                        std::size_t row) {
  std::vector<int> pnodes;
  for (const auto& pname : cpt.parent_order) {
    pnodes.push_back(model.graph.node_index(pname));
  }
  std::vector<int> codes(pnodes.size(), 0);
  std::size_t rem = row;
  for (std::size_t k = pnodes.size(); k-- > 0;) {
    const std::size_t d = static_cast<std::size_t>(model.domain_size(pnodes[k]));
    codes[k] = static_cast<int>(rem % d);
    rem /= d;
  }
  std::string key;
  for (std::size_t k = 0; k < pnodes.size(); ++k) {
    if (k) key += ',';
    key += cpt.parent_order[k] + "=" +
           model.domains[static_cast<std::size_t>(pnodes[k])]
                        [static_cast<std::size_t>(codes[k])];
  }
  return key;
}

}  // namespace

GraphFile load_graph_file(const std::string& path) {
  const nlohmann::json j = read_json_file(path);
  if (!j.is_object() || !j.contains("nodes") || !j.contains("edges")) {
    fail("graph JSON must contain 'nodes' and 'edges'");
  }
  std::vector<GraphNode> nodes;
  for (const auto& nj : j.at("nodes")) {
    nodes.push_back(GraphNode{nj.at("name").get<std::string>(),
                              kind_from_string(nj.at("kind").get<std::string>())});
  }
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& ej : j.at("edges")) {
    if (!ej.is_array() || ej.size() != 2) fail("each edge must be a [from, to] pair");
    edges.emplace_back(ej.at(0).get<std::string>(), ej.at(1).get<std::string>());
  }
  CausalGraph graph(std::move(nodes), std::move(edges));

  GraphFile out{graph, std::nullopt};
  if (!j.contains("params") || j.at("params").is_null()) return out;

  const auto& pj = j.at("params");
  CausalModel model{graph, {}, {}, {}};
  model.domains.resize(graph.node_count());
  model.cpts.resize(graph.node_count());

  const auto& dj = pj.at("domains");
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    const int node = static_cast<int>(i);
    if (node == graph.score_node()) continue;
    const std::string& name = graph.name(node);
    if (!dj.contains(name)) fail("params.domains missing node '" + name + "'");
    model.domains[i] = dj.at(name).get<std::vector<std::string>>();
  }

  const auto& cj = pj.at("cpts");
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    const int node = static_cast<int>(i);
    if (node == graph.score_node()) continue;
    const std::string& name = graph.name(node);
    if (!cj.contains(name)) fail("params.cpts missing node '" + name + "'");
    const auto& tj = cj.at(name);
    Cpt cpt;
    cpt.node = name;
    cpt.parent_order = tj.at("parents").get<std::vector<std::string>>();
    cpt.smoothing = tj.value("alpha", 0.0);
    std::size_t nrows = 1;
    for (const auto& p : cpt.parent_order) {
      nrows *= static_cast<std::size_t>(model.domain_size(graph.node_index(p)));
    }
    cpt.rows.resize(nrows);
    model.cpts[i] = cpt;  // parent_order needed by cpt_row_key below
    const auto& rows = tj.at("rows");
    for (std::size_t r = 0; r < nrows; ++r) {
      const std::string key = cpt_row_key(model, model.cpts[i], r);
      if (!rows.contains(key)) {
        fail("CPT for '" + name + "' missing row '" + key + "'");
      }
      model.cpts[i].rows[r] = rows.at(key).get<std::vector<double>>();
    }
  }

  model.cg.parent_order.push_back(graph.name(graph.protected_node()));
  for (int qn : model.q_nodes()) model.cg.parent_order.push_back(graph.name(qn));
  model.cg.min_count = pj.value("cg_min_count", 5);
  const std::size_t q_count = model.q_config_count();
  model.cg.entries.resize(2 * q_count);
  const auto& gj = pj.at("cg");
  for (int c = 0; c < 2; ++c) {
    for (std::size_t qi = 0; qi < q_count; ++qi) {
      const std::string key = model.cg_key(c, qi);
      if (!gj.contains(key)) fail("params.cg missing stratum '" + key + "'");
      const auto& e = gj.at(key);
      model.cg.entries[model.cg_index(c, qi)] =
          CgEntry{e.at("mu").get<double>(), e.at("sigma").get<double>()};
    }
  }

  validate_model(model);
  out.model = std::move(model);
  return out;
}

void save_graph_file(const std::string& path, const CausalGraph& graph,
                     const std::optional<CausalModel>& model) {
  nlohmann::json j;
  std::vector<int> node_order(graph.node_count());
  std::iota(node_order.begin(), node_order.end(), 0);
  std::sort(node_order.begin(), node_order.end(), [&](int a, int b) {
    return graph.name(a) < graph.name(b);
  });
  j["nodes"] = nlohmann::json::array();
  for (int v : node_order) {
    j["nodes"].push_back({{"kind", kind_to_string(graph.kind(v))},
                          {"name", graph.name(v)}});
  }
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& [from, to] : graph.edges()) {
    edges.emplace_back(graph.name(from), graph.name(to));
  }
  std::sort(edges.begin(), edges.end());
  j["edges"] = nlohmann::json::array();
  for (const auto& [from, to] : edges) {
    j["edges"].push_back({from, to});
  }

  if (model) {
    validate_model(*model);
    if (model->graph != graph) {
      fail("model graph differs from the graph being saved");
    }
    nlohmann::json pj;
    for (std::size_t i = 0; i < graph.node_count(); ++i) {
      const int node = static_cast<int>(i);
      if (node == graph.score_node()) continue;
      pj["domains"][graph.name(node)] = model->domains[i];
      const Cpt& cpt = model->cpts[i];
      nlohmann::json tj;
      tj["parents"] = cpt.parent_order;
      tj["alpha"] = cpt.smoothing;
      for (std::size_t r = 0; r < cpt.rows.size(); ++r) {
        tj["rows"][cpt_row_key(*model, cpt, r)] = cpt.rows[r];
      }
      pj["cpts"][graph.name(node)] = std::move(tj);
    }
    pj["cg_min_count"] = model->cg.min_count;
    for (int c = 0; c < 2; ++c) {
      for (std::size_t qi = 0; qi < model->q_config_count(); ++qi) {
        const CgEntry& e = model->cg_entry(c, qi);
        pj["cg"][model->cg_key(c, qi)] = {{"mu", e.mu}, {"sigma", e.sigma}};
      }
    }
    j["params"] = std::move(pj);
  }

  write_json_file(path, j);
}

}  // namespace fairrank
