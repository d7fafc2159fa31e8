#include "fairrank/structure.hpp"

#include "fairrank/errors.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace fairrank {

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw ValidationError("structure", msg);
}

double chi_square_p_value(double statistic, double df) {
  if (statistic <= 0) return 1.0;
  boost::math::chi_squared dist(df);
  return boost::math::cdf(boost::math::complement(dist, statistic));
}

// Mixed-radix stratum index over the conditioning attributes for one row.
struct Stratifier {
  std::vector<int> cols;
  std::vector<std::size_t> sizes;
  std::size_t count = 1;

  Stratifier(const RankedDataset& data, const std::vector<std::string>& cond) {
    for (const auto& name : cond) {
      const int col = data.attribute_index(name);
      cols.push_back(col);
      sizes.push_back(data.attribute_domains()[static_cast<std::size_t>(col)].size());
      count *= sizes.back();
      if (count > 1000000) fail("conditioning stratification too large");
    }
  }

  std::size_t index(const RankedDataset& data, std::size_t row) const {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      idx = idx * sizes[k] +
            static_cast<std::size_t>(
                data.value_code(row, static_cast<std::size_t>(cols[k])));
    }
    return idx;
  }
};

constexpr double kVarianceFloor = 1e-6;  // sigma floor 1e-3, squared

double gaussian_loglik(std::size_t n, double variance_mle) {
  if (n == 0) return 0.0;
  const double v = std::max(variance_mle, kVarianceFloor);
  return -0.5 * static_cast<double>(n) *
         (std::log(2.0 * M_PI * v) + 1.0);
}

}  // namespace

CiTestResult chi_square_ci(const RankedDataset& data, const std::string& x,
                           const std::string& y,
                           const std::vector<std::string>& cond, double alpha) {
  CiTestResult result;
  result.x = x;
  result.y = y;
  result.conditioning_set = cond;

  const int xcol = data.attribute_index(x);
  const int ycol = data.attribute_index(y);
  const std::size_t xdom =
      data.attribute_domains()[static_cast<std::size_t>(xcol)].size();
  const std::size_t ydom =
      data.attribute_domains()[static_cast<std::size_t>(ycol)].size();
  const Stratifier strat(data, cond);

  std::vector<std::vector<double>> table(strat.count,
                                         std::vector<double>(xdom * ydom, 0.0));
  for (std::size_t r = 0; r < data.size(); ++r) {
    const std::size_t s = strat.index(data, r);
    const auto xv = static_cast<std::size_t>(
        data.value_code(r, static_cast<std::size_t>(xcol)));
    const auto yv = static_cast<std::size_t>(
        data.value_code(r, static_cast<std::size_t>(ycol)));
    table[s][xv * ydom + yv] += 1.0;
  }

  double statistic = 0.0;
  double df = 0.0;
  bool thin = false;
  bool any_nonempty = false;
  for (std::size_t s = 0; s < strat.count; ++s) {
    std::vector<double> row_m(xdom, 0.0), col_m(ydom, 0.0);
    double total = 0;
    for (std::size_t xv = 0; xv < xdom; ++xv) {
      for (std::size_t yv = 0; yv < ydom; ++yv) {
        const double c = table[s][xv * ydom + yv];
        row_m[xv] += c;
        col_m[yv] += c;
        total += c;
      }
    }
    if (total == 0) continue;
    any_nonempty = true;
    const auto r_obs = static_cast<double>(
        std::count_if(row_m.begin(), row_m.end(), [](double v) { return v > 0; }));
    const auto c_obs = static_cast<double>(
        std::count_if(col_m.begin(), col_m.end(), [](double v) { return v > 0; }));
    if (r_obs < 2 || c_obs < 2) continue;  // no information in this stratum
    df += (r_obs - 1) * (c_obs - 1);
    for (std::size_t xv = 0; xv < xdom; ++xv) {
      if (row_m[xv] == 0) continue;
      for (std::size_t yv = 0; yv < ydom; ++yv) {
        if (col_m[yv] == 0) continue;
        const double expected = row_m[xv] * col_m[yv] / total;
        if (expected < 1.0) thin = true;
        const double d = table[s][xv * ydom + yv] - expected;
        statistic += d * d / expected;
      }
    }
  }

  if (!any_nonempty || df <= 0 || thin) {
    result.inconclusive = true;
    result.independent = true;
    result.statistic = statistic;
    result.df = df;
    return result;
  }
  result.statistic = statistic;
  result.df = df;
  result.p_value = chi_square_p_value(statistic, df);
  result.independent = result.p_value > alpha;
  return result;
}

CiTestResult cg_likelihood_ratio_ci(const RankedDataset& data,
                                    const ScoreAssignment& scores,
                                    const std::string& y,
                                    const std::vector<std::string>& cond,
                                    double alpha) {
  if (scores.scores.size() != data.size()) {
    fail("scores are not aligned with the dataset");
  }
  CiTestResult result;
  result.x = "__score";
  result.y = y;
  result.conditioning_set = cond;

  const int ycol = data.attribute_index(y);
  const std::size_t ydom =
      data.attribute_domains()[static_cast<std::size_t>(ycol)].size();
  const Stratifier strat(data, cond);

  struct Acc {
    std::size_t n = 0;
    double sum = 0, sumsq = 0;
    void add(double v) {
      ++n;
      sum += v;
      sumsq += v * v;
    }
    double var_mle() const {
      if (n == 0) return 0;
      const double mean = sum / static_cast<double>(n);
      return std::max(0.0, sumsq / static_cast<double>(n) - mean * mean);
    }
  };
  std::vector<Acc> null_acc(strat.count);
  std::vector<Acc> full_acc(strat.count * ydom);
  for (std::size_t r = 0; r < data.size(); ++r) {
    const std::size_t s = strat.index(data, r);
    const auto yv = static_cast<std::size_t>(
        data.value_code(r, static_cast<std::size_t>(ycol)));
    null_acc[s].add(scores.scores[r]);
    full_acc[s * ydom + yv].add(scores.scores[r]);
  }

  double ll_full = 0, ll_null = 0;
  std::size_t k_full = 0, k_null = 0;
  for (std::size_t s = 0; s < strat.count; ++s) {
    if (null_acc[s].n == 0) continue;
    ll_null += gaussian_loglik(null_acc[s].n, null_acc[s].var_mle());
    ++k_null;
    for (std::size_t yv = 0; yv < ydom; ++yv) {
      const Acc& a = full_acc[s * ydom + yv];
      if (a.n == 0) continue;
      ll_full += gaussian_loglik(a.n, a.var_mle());
      ++k_full;
    }
  }

  const double df = 2.0 * (static_cast<double>(k_full) - static_cast<double>(k_null));
  if (k_null == 0 || df <= 0) {
    result.inconclusive = true;
    result.independent = true;
    return result;
  }
  result.statistic = std::max(0.0, 2.0 * (ll_full - ll_null));
  result.df = df;
  result.p_value = chi_square_p_value(result.statistic, df);
  result.independent = result.p_value > alpha;
  return result;
}

// ---------------------------------------------------------------------------
// PC search
// ---------------------------------------------------------------------------

namespace {

// Mixed graph over variable indices: und[i][j] for i-j, dir[i][j] for i->j.
struct MixedGraph {
  std::size_t n;
  std::vector<std::vector<char>> und, dir;

  explicit MixedGraph(std::size_t n_)
      : n(n_), und(n_, std::vector<char>(n_, 0)), dir(n_, std::vector<char>(n_, 0)) {}

  bool adjacent(std::size_t i, std::size_t j) const {
    return und[i][j] || dir[i][j] || dir[j][i];
  }
  void orient(std::size_t i, std::size_t j) {  // i -> j
    und[i][j] = und[j][i] = 0;
    dir[i][j] = 1;
  }
  // Is `to` reachable from `from` along directed edges?
  bool reaches(std::size_t from, std::size_t to) const {
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{from};
    seen[from] = 1;
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      if (v == to) return true;
      for (std::size_t w = 0; w < n; ++w) {
        if (dir[v][w] && !seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
      }
    }
    return false;
  }
};

// Next k-combination of indices into a pool, lexicographic. Returns false
// when exhausted.
bool next_combination(std::vector<std::size_t>& comb, std::size_t pool_size) {
  const std::size_t k = comb.size();
  for (std::size_t i = k; i-- > 0;) {
    if (comb[i] < pool_size - (k - i)) {
      ++comb[i];
      for (std::size_t j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

CausalGraph learn_structure(const RankedDataset& data,
                            const ScoreAssignment& scores,
                            const StructureConfig& config,
                            std::vector<std::string>* warnings) {
  if (!(config.alpha > 0 && config.alpha < 1)) fail("alpha must be in (0,1)");
  if (config.max_cond < 0) fail("max_cond must be nonnegative");

  // Variables: attributes sorted by name, then the score node.
  std::vector<std::string> vars = data.attribute_names();
  std::sort(vars.begin(), vars.end());
  vars.push_back("__score");
  const std::size_t n = vars.size();
  const std::size_t score = n - 1;
  std::size_t prot = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (vars[i] == data.protected_attribute()) prot = i;
  }

  auto log_warning = [&](const CiTestResult& t) {
    if (!warnings || !t.inconclusive) return;
    std::string msg = "inconclusive CI test " + t.x + " vs " + t.y + " given {";
    for (std::size_t k = 0; k < t.conditioning_set.size(); ++k) {
      if (k) msg += ',';
      msg += t.conditioning_set[k];
    }
    msg += "}: treated as independent";
    warnings->push_back(msg);
  };

  auto run_ci = [&](std::size_t i, std::size_t j,
                    const std::vector<std::string>& cond) {
    CiTestResult t;
    if (i == score || j == score) {
      const std::size_t other = (i == score) ? j : i;
      t = cg_likelihood_ratio_ci(data, scores, vars[other], cond, config.alpha);
    } else {
      t = chi_square_ci(data, vars[i], vars[j], cond, config.alpha);
    }
    log_warning(t);
    return t;
  };

  MixedGraph g(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) g.und[i][j] = g.und[j][i] = 1;
  }
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> sepset;

  // PC-stable skeleton: adjacency snapshots per level, conditioning sets drawn
  // from the snapshot neighborhoods minus the score node.
  for (int level = 0; level <= config.max_cond; ++level) {
    const MixedGraph snapshot = g;
    bool any_testable = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!g.und[i][j]) continue;
        bool removed = false;
        for (int side = 0; side < 2 && !removed; ++side) {
          const std::size_t anchor = side == 0 ? i : j;
          const std::size_t other = side == 0 ? j : i;
          std::vector<std::size_t> pool;
          for (std::size_t k = 0; k < n; ++k) {
            if (k != other && k != anchor && k != score &&
                snapshot.adjacent(anchor, k)) {
              pool.push_back(k);
            }
          }
          if (pool.size() < static_cast<std::size_t>(level)) continue;
          any_testable = true;
          std::vector<std::size_t> comb(static_cast<std::size_t>(level));
          std::iota(comb.begin(), comb.end(), 0);
          do {
            std::vector<std::string> cond;
            std::vector<std::size_t> cond_idx;
            for (std::size_t c : comb) {
              cond.push_back(vars[pool[c]]);
              cond_idx.push_back(pool[c]);
            }
            const CiTestResult t = run_ci(i, j, cond);
            if (t.independent) {
              g.und[i][j] = g.und[j][i] = 0;
              sepset[{i, j}] = cond_idx;
              removed = true;
              break;
            }
          } while (level > 0 && next_combination(comb, pool.size()));
        }
      }
    }
    if (!any_testable) break;
  }

  // Background knowledge: protected node emits, score node absorbs.
  for (std::size_t k = 0; k < n; ++k) {
    if (g.und[prot][k]) g.orient(prot, k);
    if (g.und[k][score]) g.orient(k, score);
  }

  // Collider orientation on unshielded triples i - j - k with nonadjacent
  // endpoints and j outside sepset(i,k). Background knowledge wins conflicts.
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      if (i == j || !g.adjacent(i, j)) continue;
      for (std::size_t k = i + 1; k < n; ++k) {
        if (k == j || !g.adjacent(j, k) || g.adjacent(i, k)) continue;
        auto it = sepset.find({std::min(i, k), std::max(i, k)});
        if (it == sepset.end()) continue;
        const auto& sep = it->second;
        if (std::find(sep.begin(), sep.end(), j) != sep.end()) continue;
        // Want i -> j <- k; orient whichever halves are still undirected,
        // skipping any orientation that would close a directed cycle.
        if (j == prot) continue;
        if (g.und[i][j] && !g.reaches(j, i)) g.orient(i, j);
        if (g.und[k][j] && !g.reaches(j, k)) g.orient(k, j);
      }
    }
  }

  // Propagation (Meek) rules R1-R3 to closure.
  auto propagate = [&]() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
          if (!g.und[a][b] || b == prot || a == score) continue;
          bool orient_ab = false;
          // R1: c -> a, a - b, c and b nonadjacent.
          for (std::size_t c = 0; c < n && !orient_ab; ++c) {
            if (g.dir[c][a] && !g.adjacent(c, b)) orient_ab = true;
          }
          // R2: a -> c -> b and a - b.
          for (std::size_t c = 0; c < n && !orient_ab; ++c) {
            if (g.dir[a][c] && g.dir[c][b]) orient_ab = true;
          }
          // R3: a - c -> b, a - d -> b, c and d nonadjacent.
          for (std::size_t c = 0; c < n && !orient_ab; ++c) {
            if (!(g.und[a][c] && g.dir[c][b])) continue;
            for (std::size_t d = c + 1; d < n; ++d) {
              if (g.und[a][d] && g.dir[d][b] && !g.adjacent(c, d)) {
                orient_ab = true;
                break;
              }
            }
          }
          if (orient_ab && !g.reaches(b, a)) {
            g.orient(a, b);
            changed = true;
          }
        }
      }
    }
  };
  propagate();

  // Deterministic completion: remaining undirected edges point from the
  // lexicographically smaller to the larger name unless that closes a cycle.
  while (true) {
    std::pair<std::size_t, std::size_t> pick{n, n};
    std::string best_key;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!g.und[i][j]) continue;
        const std::string key = std::min(vars[i], vars[j]) + "\n" + std::max(vars[i], vars[j]);
        if (pick.first == n || key < best_key) {
          pick = {i, j};
          best_key = key;
        }
      }
    }
    if (pick.first == n) break;
    std::size_t from = pick.first, to = pick.second;
    if (vars[from] > vars[to]) std::swap(from, to);
    if (to == prot || from == score || g.reaches(to, from)) std::swap(from, to);
    g.orient(from, to);
    propagate();
  }

  std::vector<GraphNode> nodes;
  for (std::size_t i = 0; i < n; ++i) {
    NodeKind kind = NodeKind::Profile;
    if (i == prot) kind = NodeKind::Protected;
    if (i == score) kind = NodeKind::Score;
    nodes.push_back(GraphNode{vars[i], kind});
  }
  std::vector<std::pair<std::string, std::string>> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (g.dir[i][j]) edges.emplace_back(vars[i], vars[j]);
    }
  }
  return CausalGraph(std::move(nodes), std::move(edges));
}

}  // namespace fairrank
