#include "fairrank/graph.hpp"
#include "fairrank/errors.hpp"
#include "fairrank/jsonio.hpp"

#include "support/fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

using namespace fairrank;

namespace {

ScoreAssignment scores_of(std::vector<double> v) {
  ScoreAssignment s;
  s.scores = std::move(v);
  return s;
}

}  // namespace

TEST_CASE("graph construction enforces the structural assumptions") {
  SUBCASE("protected node with a parent is rejected") {
    CHECK_THROWS_WITH_AS(
        CausalGraph({{"c", NodeKind::Protected},
                     {"z", NodeKind::Profile},
                     {"s", NodeKind::Score}},
                    {{"z", "c"}, {"z", "s"}}),
        doctest::Contains("protected"), ValidationError);
  }
  SUBCASE("score node with a child is rejected") {
    CHECK_THROWS_WITH_AS(
        CausalGraph({{"c", NodeKind::Protected},
                     {"z", NodeKind::Profile},
                     {"s", NodeKind::Score}},
                    {{"s", "z"}}),
        doctest::Contains("score"), ValidationError);
  }
  SUBCASE("cycles are rejected") {
    CHECK_THROWS_WITH_AS(
        CausalGraph({{"c", NodeKind::Protected},
                     {"a", NodeKind::Profile},
                     {"b", NodeKind::Profile},
                     {"s", NodeKind::Score}},
                    {{"a", "b"}, {"b", "a"}}),
        doctest::Contains("cycle"), ValidationError);
  }
  SUBCASE("exactly one protected and one score node") {
    CHECK_THROWS_AS(CausalGraph({{"c", NodeKind::Protected},
                                 {"s", NodeKind::Score},
                                 {"s2", NodeKind::Score}},
                                {}),
                    ValidationError);
    CHECK_THROWS_AS(CausalGraph({{"z", NodeKind::Profile},
                                 {"s", NodeKind::Score}},
                                {}),
                    ValidationError);
  }
}

TEST_CASE("topological order puts the score last and respects edges") {
  const CausalGraph g = fixtures::toy_graph();
  const auto order = topological_order(g);
  CHECK(order.size() == 5);
  CHECK(order.back() == "__score");
  auto pos = [&](const std::string& name) {
    return std::find(order.begin(), order.end(), name) - order.begin();
  };
  CHECK(pos("race") < pos("zipcode"));
  CHECK(pos("edu") < pos("interview"));
}

TEST_CASE("edgeless graph: any order with the score last is fine") {
  const CausalGraph g({{"c", NodeKind::Protected},
                       {"z", NodeKind::Profile},
                       {"s", NodeKind::Score}},
                      {});
  const auto order = topological_order(g);
  CHECK(order.back() == "s");
  CHECK(order.size() == 3);
}

TEST_CASE("estimate_parameters: constant stratum hits the sigma floor") {
  auto data = RankedDataset::from_string_rows(
      {"c"}, {{"0", "1"}}, {{"1"}, {"1"}, {"1"}, {"0"}, {"0"}, {"0"}},
      {1, 2, 3, 4, 5, 6}, "c", "1", {});
  const CausalGraph g({{"c", NodeKind::Protected}, {"s", NodeKind::Score}},
                      {{"c", "s"}});
  const auto model = estimate_parameters(
      data, scores_of({1.0, 1.0, 1.0, 2.0, 3.0, 4.0}), g, 1.0, 2);
  const int fav = model.value_code(0, "1");
  CHECK(model.cg_entry(fav, 0).mu == doctest::Approx(1.0));
  CHECK(model.cg_entry(fav, 0).sigma == doctest::Approx(1e-3));
  CHECK(model.cg_entry(1 - fav, 0).mu == doctest::Approx(3.0));
}

TEST_CASE("estimate_parameters: two-group sample means") {
  auto data = RankedDataset::from_string_rows(
      {"c"}, {{"0", "1"}}, {{"1"}, {"1"}, {"0"}, {"0"}}, {1, 2, 3, 4}, "c", "1",
      {});
  const CausalGraph g({{"c", NodeKind::Protected}, {"s", NodeKind::Score}},
                      {{"c", "s"}});
  const auto model =
      estimate_parameters(data, scores_of({2.0, 4.0, 0.0, 2.0}), g, 1.0, 2);
  CHECK(model.cg_entry(1, 0).mu == doctest::Approx(3.0));  // c+ rows {2,4}
  CHECK(model.cg_entry(0, 0).mu == doctest::Approx(1.0));  // c- rows {0,2}
}

TEST_CASE("estimate_parameters: toy CPTs equal observed frequencies at alpha 0") {
  const auto data = fixtures::toy_dataset(fixtures::rank_boosted());
  std::vector<double> scores(10, 0.0);
  for (std::size_t i = 0; i < 10; ++i) {
    scores[i] = 2.0 - 0.1 * static_cast<double>(data.rank_of(i));
  }
  const auto model = estimate_parameters(data, scores_of(scores),
                                         fixtures::toy_graph(), 0.0, 1);
  const int zip = model.graph.node_index("zipcode");
  const Cpt& cpt = model.cpts[static_cast<std::size_t>(zip)];
  REQUIRE(cpt.parent_order == std::vector<std::string>{"race"});
  const int one = model.value_code(zip, "1");
  // P(zip=1 | race=1) = 1.0 and P(zip=1 | race=0) = 0.4 in the ten rows.
  const int race = model.graph.node_index("race");
  const int race1 = model.value_code(race, "1");
  CHECK(cpt.rows[static_cast<std::size_t>(race1)][static_cast<std::size_t>(one)] ==
        doctest::Approx(1.0));
  CHECK(cpt.rows[static_cast<std::size_t>(1 - race1)][static_cast<std::size_t>(one)] ==
        doctest::Approx(0.4));
}

TEST_CASE("CPT rows sum to one, smoothed or not") {
  const auto data = fixtures::toy_dataset(fixtures::rank_objective());
  std::vector<double> scores(10);
  for (std::size_t i = 0; i < 10; ++i) scores[i] = static_cast<double>(i) * 0.3;
  for (double alpha : {1.0, 3.5}) {
    const auto model = estimate_parameters(data, scores_of(scores),
                                           fixtures::toy_graph(), alpha, 5);
    for (const auto& cpt : model.cpts) {
      for (const auto& row : cpt.rows) {
        double sum = 0;
        for (double p : row) sum += p;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("alpha 0 with an unobserved parent configuration fails loudly") {
  // z takes value "2" nowhere, so node w (whose parent is z) has a parent
  // stratum with zero observations: unsmoothed estimation cannot define it.
  const CausalGraph g({{"c", NodeKind::Protected},
                       {"z", NodeKind::Profile},
                       {"w", NodeKind::Profile},
                       {"s", NodeKind::Score}},
                      {{"c", "z"}, {"z", "w"}, {"w", "s"}});
  auto data = RankedDataset::from_string_rows(
      {"c", "z", "w"}, {{"0", "1"}, {"0", "1", "2"}, {"0", "1"}},
      {{"1", "1", "0"}, {"0", "0", "1"}}, {1, 2}, "c", "1", {});
  CHECK_THROWS_WITH_AS(
      estimate_parameters(data, scores_of({1.0, 0.5}), g, 0.0, 1),
      doctest::Contains("zero observations"), ValidationError);
  // With smoothing the same setup estimates fine (the empty row is uniform).
  CHECK_NOTHROW(estimate_parameters(data, scores_of({1.0, 0.5}), g, 1.0, 1));
}

TEST_CASE("estimation is invariant to row order") {
  const auto data = fixtures::toy_dataset(fixtures::rank_boosted());
  std::vector<double> scores(10);
  for (std::size_t i = 0; i < 10; ++i) scores[i] = 1.0 + 0.2 * static_cast<double>(i);

  // Permute rows (and scores/ranks with them).
  std::vector<std::size_t> perm(10);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937 rng(3);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<std::string>> rows;
  std::vector<int> rank;
  std::vector<double> pscores;
  for (std::size_t i : perm) {
    std::vector<std::string> row;
    for (std::size_t a = 0; a < 4; ++a)

      row.push_back(data.value(i, a));
    rows.push_back(std::move(row));
    rank.push_back(data.rank_of(i));
    pscores.push_back(scores[i]);
  }
  const auto permuted = RankedDataset::from_string_rows(
      data.attribute_names(), data.attribute_domains(), rows, rank, "race", "1",
      {"zipcode"});

  const auto m1 = estimate_parameters(data, scores_of(scores),
                                      fixtures::toy_graph(), 1.0, 2);
  const auto m2 = estimate_parameters(permuted, scores_of(pscores),
                                      fixtures::toy_graph(), 1.0, 2);
  for (std::size_t v = 0; v < m1.cg.entries.size(); ++v) {
    CHECK(m1.cg.entries[v].mu == doctest::Approx(m2.cg.entries[v].mu).epsilon(1e-12));
    CHECK(m1.cg.entries[v].sigma ==
          doctest::Approx(m2.cg.entries[v].sigma).epsilon(1e-12));
  }
  CHECK(m1.cpts == m2.cpts);
}

TEST_CASE("graph JSON round-trips byte-identically in canonical form") {
  fixtures::TempDir tmp;
  const std::string p1 = tmp.file("g1.json");
  const std::string p2 = tmp.file("g2.json");
  save_graph_file(p1, fixtures::toy_graph());
  const auto gf = load_graph_file(p1);
  CHECK(gf.graph == fixtures::toy_graph());
  CHECK_FALSE(gf.model.has_value());
  save_graph_file(p2, gf.graph);
  std::ifstream f1(p1), f2(p2);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());
  CHECK(!s1.str().empty());
}

TEST_CASE("graph JSON with an edge out of the score node fails to load") {
  fixtures::TempDir tmp;
  const std::string path = tmp.file("bad.json");
  {
    std::ofstream out(path);
    out << R"({"nodes":[{"name":"c","kind":"protected"},
                        {"name":"z","kind":"profile"},
                        {"name":"s","kind":"score"}],
               "edges":[["s","z"]]})";
  }
  CHECK_THROWS_AS(load_graph_file(path), ValidationError);
}

TEST_CASE("malformed JSON is reported") {
  fixtures::TempDir tmp;
  const std::string path = tmp.file("broken.json");
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  CHECK_THROWS_AS(load_graph_file(path), ValidationError);
}

TEST_CASE("a parameterized model round-trips through JSON") {
  fixtures::TempDir tmp;
  const auto model = fixtures::mediator_model(0.231, 0.055);
  const std::string p1 = tmp.file("m1.json");
  const std::string p2 = tmp.file("m2.json");
  save_graph_file(p1, model.graph, model);
  const auto gf = load_graph_file(p1);
  REQUIRE(gf.model.has_value());
  CHECK(gf.model->cg.entries.size() == 4);
  for (std::size_t v = 0; v < 4; ++v) {
    CHECK(gf.model->cg.entries[v].mu ==
          doctest::Approx(model.cg.entries[v].mu).epsilon(1e-12));
  }
  save_graph_file(p2, gf.graph, gf.model);
  std::ifstream f1(p1), f2(p2);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());
}

TEST_CASE("canonical stratum keys: protected first, Q sorted by name") {
  const auto model = fixtures::toy_model(2.0);
  // Q nodes sorted: edu, interview, zipcode. First stratum is all-first
  // domain values.
  CHECK(model.cg_key(0, 0) == "race=0|edu=1,interview=1,zipcode=0");
  const std::size_t last = model.q_config_count() - 1;
  CHECK(model.cg_key(1, last) == "race=1|edu=5,interview=5,zipcode=1");
}

TEST_CASE("cg key for an empty Q keeps the separator") {
  const CausalGraph g({{"c", NodeKind::Protected}, {"s", NodeKind::Score}},
                      {{"c", "s"}});
  CausalModel model{g, {{"0", "1"}, {}}, {}, {}};
  model.cpts.resize(2);
  model.cpts[0] = Cpt{"c", {}, {{0.5, 0.5}}, 0.0};
  model.cg.parent_order = {"c"};
  model.cg.entries = {{1.0, 0.5}, {2.0, 0.5}};
  validate_model(model);
  CHECK(model.cg_key(0, 0) == "c=0|");
  CHECK(model.cg_key(1, 0) == "c=1|");
}
