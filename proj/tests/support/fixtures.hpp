// Shared fixtures: the ten-candidate recruiting example, its causal graph,
// and small hand-parameterized models with exactly known effect values.
#pragma once

#include "fairrank/dataset.hpp"
#include "fairrank/graph.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace fixtures {

struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("fairrank_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

// Ten candidates: race (1 favorable / 0 protected), zip code, interview and
// education results on a 1..5 scale where larger is stronger.
inline const std::vector<int>& race() {
  static const std::vector<int> v{1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
  return v;
}
inline const std::vector<int>& zip() {
  static const std::vector<int> v{1, 1, 1, 1, 1, 1, 0, 0, 1, 0};
  return v;
}
inline const std::vector<int>& interview() {
  static const std::vector<int> v{1, 2, 2, 4, 2, 5, 4, 4, 3, 2};
  return v;
}
inline const std::vector<int>& education() {
  static const std::vector<int> v{1, 2, 1, 2, 4, 5, 4, 5, 3, 5};
  return v;
}

// Ranking by descending education + interview (ties: earlier candidate
// first): the "objective" ranker.
inline const std::vector<int>& rank_objective() {
  static const std::vector<int> v{10, 8, 9, 5, 6, 1, 3, 2, 7, 4};
  return v;
}

// Ranking by descending education + interview + 2 * race: the ranker that
// boosts the favorable group, mixing the groups in the ordering.
inline const std::vector<int>& rank_boosted() {
  static const std::vector<int> v{10, 7, 9, 3, 4, 1, 5, 2, 8, 6};
  return v;
}

inline fairrank::RankedDataset toy_dataset(const std::vector<int>& rank) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < 10; ++i) {
    rows.push_back({std::to_string(race()[i]), std::to_string(zip()[i]),
                    std::to_string(interview()[i]),
                    std::to_string(education()[i])});
  }
  return fairrank::RankedDataset::from_string_rows(
      {"race", "zipcode", "interview", "edu"},
      {{"0", "1"},
       {"0", "1"},
       {"1", "2", "3", "4", "5"},
       {"1", "2", "3", "4", "5"}},
      rows, rank, "race", "1", {"zipcode"});
}

inline void write_toy_csv(const std::string& path, const std::vector<int>& rank) {
  std::ofstream out(path);
  out << "race,zipcode,interview,edu,rank\n";
  for (std::size_t i = 0; i < 10; ++i) {
    out << race()[i] << ',' << zip()[i] << ',' << interview()[i] << ','
        << education()[i] << ',' << rank[i] << '\n';
  }
}

// The toy example's graph: race -> zipcode, everything -> score, edu ->
// interview.
inline fairrank::CausalGraph toy_graph() {
  return fairrank::CausalGraph(
      {{"race", fairrank::NodeKind::Protected},
       {"zipcode", fairrank::NodeKind::Profile},
       {"interview", fairrank::NodeKind::Profile},
       {"edu", fairrank::NodeKind::Profile},
       {"__score", fairrank::NodeKind::Score}},
      {{"race", "zipcode"},
       {"race", "__score"},
       {"zipcode", "__score"},
       {"edu", "interview"},
       {"edu", "__score"},
       {"interview", "__score"}});
}

// Hand-parameterized toy models: CPTs estimated from the ten rows with
// Laplace alpha, CG means set to the ranker's true scoring rule. `bonus` is
// what the ranker adds for the favorable group.
inline fairrank::CausalModel toy_model(double bonus, double alpha = 1.0);

// Two-stratum single-mediator model (c -> z, c -> s, z -> s) with exactly
// chosen effect sizes: DE_d(c+,c-) = de_d and DE_i(c+,c-) = de_i with
// E[S|c+] = 1.
inline fairrank::CausalModel mediator_model(double de_d, double de_i,
                                            double sigma = 0.5) {
  fairrank::CausalGraph graph({{"c", fairrank::NodeKind::Protected},
                               {"z", fairrank::NodeKind::Profile},
                               {"s", fairrank::NodeKind::Score}},
                              {{"c", "z"}, {"c", "s"}, {"z", "s"}});
  fairrank::CausalModel model{graph, {}, {}, {}};
  model.domains = {{"0", "1"}, {"0", "1"}, {}};
  model.cpts.resize(3);
  model.cpts[0] = fairrank::Cpt{"c", {}, {{0.5, 0.5}}, 0.0};
  // P(z=1|c=0) = 0.4, P(z=1|c=1) = 0.6; favorable will be "1".
  model.cpts[1] = fairrank::Cpt{"z", {"c"}, {{0.6, 0.4}, {0.4, 0.6}}, 0.0};
  // Solve for means giving the requested relative effects with baseline 1:
  //   mu+z - mu-z = de_d (both z), mu-1 - mu-0 = de_i / 0.2,
  //   E[S|c+] = mu-0 + 0.6 * (mu-1 - mu-0) + de_d = 1.
  const double d = de_i / 0.2;
  const double mu_minus_0 = 1.0 - de_d - 0.6 * d;
  model.cg.parent_order = {"c", "z"};
  model.cg.entries = {
      {mu_minus_0, sigma},              // c=0, z=0
      {mu_minus_0 + d, sigma},          // c=0, z=1
      {mu_minus_0 + de_d, sigma},       // c=1, z=0
      {mu_minus_0 + d + de_d, sigma},   // c=1, z=1
  };
  fairrank::validate_model(model);
  return model;
}

inline fairrank::CausalModel toy_model(double bonus, double alpha) {
  const fairrank::CausalGraph graph = toy_graph();
  fairrank::CausalModel model{graph, {}, {}, {}};
  model.domains.resize(5);
  model.cpts.resize(5);
  const std::vector<std::string> binary{"0", "1"};
  const std::vector<std::string> scale{"1", "2", "3", "4", "5"};
  model.domains[graph.node_index("race")] = binary;
  model.domains[graph.node_index("zipcode")] = binary;
  model.domains[graph.node_index("interview")] = scale;
  model.domains[graph.node_index("edu")] = scale;

  auto smoothed = [&](std::vector<double> counts, double total) {
    const double width = static_cast<double>(counts.size());
    for (double& c : counts) c = (c + alpha) / (total + alpha * width);
    return counts;
  };

  // race: 5 of each.
  model.cpts[graph.node_index("race")] =
      fairrank::Cpt{"race", {}, {smoothed({5, 5}, 10)}, alpha};
  // zipcode | race: race=0 -> {3,2}; race=1 -> {0,5}.
  model.cpts[graph.node_index("zipcode")] = fairrank::Cpt{
      "zipcode", {"race"}, {smoothed({3, 2}, 5), smoothed({0, 5}, 5)}, alpha};
  // edu marginal: values 1..5 appear {2,2,1,2,3} times.
  model.cpts[graph.node_index("edu")] =
      fairrank::Cpt{"edu", {}, {smoothed({2, 2, 1, 2, 3}, 10)}, alpha};
  // interview | edu.
  {
    std::vector<std::vector<double>> rows;
    for (int e = 1; e <= 5; ++e) {
      std::vector<double> counts(5, 0.0);
      double total = 0;
      for (std::size_t i = 0; i < 10; ++i) {
        if (education()[i] == e) {
          counts[static_cast<std::size_t>(interview()[i] - 1)] += 1;
          total += 1;
        }
      }
      rows.push_back(smoothed(counts, total));
    }
    model.cpts[graph.node_index("interview")] =
        fairrank::Cpt{"interview", {"edu"}, std::move(rows), alpha};
  }

  // CG: mean = edu + interview + bonus for the favorable group; sigma 0.75.
  // Q order is sorted by name: edu, interview, zipcode.
  model.cg.parent_order = {"race", "edu", "interview", "zipcode"};
  model.cg.entries.resize(2 * 5 * 5 * 2);
  for (int c = 0; c < 2; ++c) {
    std::size_t qi = 0;
    for (int e = 1; e <= 5; ++e) {
      for (int i = 1; i <= 5; ++i) {
        for (int z = 0; z < 2; ++z) {
          model.cg.entries[model.cg_index(c, qi)] =
              fairrank::CgEntry{static_cast<double>(e + i) + (c == 1 ? bonus : 0.0), 0.75};
          ++qi;
        }
      }
    }
  }
  fairrank::validate_model(model);
  return model;
}

}  // namespace fixtures
