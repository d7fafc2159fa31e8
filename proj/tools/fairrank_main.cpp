// fairrank: audit a ranked dataset for direct and indirect discrimination
// through a mixed-variable causal graph, and repair it with minimal score
// distortion.
//
// Exit codes: 0 success, 1 validation/usage/IO error, 2 unidentifiable
// path-specific effect, 3 numeric non-convergence.

#include "fairrank/btscore.hpp"
#include "fairrank/dataset.hpp"
#include "fairrank/effects.hpp"
#include "fairrank/errors.hpp"
#include "fairrank/fairmetrics.hpp"
#include "fairrank/graph.hpp"
#include "fairrank/jsonio.hpp"
#include "fairrank/repair.hpp"
#include "fairrank/structure.hpp"
#include "fairrank/threshold.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

struct RoleFlags {
  std::string rank_col = "rank";
  std::string protected_attr;
  std::string favorable;
  std::vector<std::string> redlining;

  void attach(CLI::App* cmd, bool need_protected) {
    cmd->add_option("--rank-col", rank_col, "Rank column name")
        ->capture_default_str();
    auto* p = cmd->add_option("--protected", protected_attr,
                              "Protected attribute column");
    auto* f = cmd->add_option("--favorable", favorable,
                              "Favorable value of the protected attribute");
    cmd->add_option("--redlining", redlining,
                    "Redlining attribute names (comma separated)")
        ->delimiter(',');
    if (need_protected) {
      p->required();
      f->required();
    }
  }

  fairrank::ColumnRoles roles() const {
    fairrank::ColumnRoles r;
    r.rank_column = rank_col;
    r.protected_attribute = protected_attr;
    r.favorable_value = favorable;
    r.redlining = redlining;
    return r;
  }

  json to_json() const {
    return json{{"rank_col", rank_col},
                {"protected", protected_attr},
                {"favorable", favorable},
                {"redlining", redlining}};
  }
};

struct FitFlags {
  double lambda = 0.5;
  double anchor = 1.0;
  double tol = 1e-8;
  int max_iters = 10000;

  void attach(CLI::App* cmd) {
    cmd->add_option("--lambda", lambda, "Bradley-Terry L2 regularization")
        ->capture_default_str();
    cmd->add_option("--anchor", anchor, "Score gauge anchor (mean after fit)")
        ->capture_default_str();
    cmd->add_option("--tol", tol, "Gradient-norm stopping tolerance")
        ->capture_default_str();
    cmd->add_option("--max-iters", max_iters, "Gradient descent iteration cap")
        ->capture_default_str();
  }

  fairrank::BTFitConfig config() const {
    return fairrank::BTFitConfig{lambda, max_iters, tol, anchor};
  }

  json to_json() const {
    return json{{"lambda", lambda},
                {"anchor", anchor},
                {"tol", tol},
                {"max_iters", max_iters}};
  }
};

struct ModelFlags {
  double smoothing = 1.0;
  int min_count = 5;

  void attach(CLI::App* cmd) {
    cmd->add_option("--smoothing", smoothing, "Laplace alpha for CPT estimation")
        ->capture_default_str();
    cmd->add_option("--min-count", min_count,
                    "Minimum stratum size before CG backoff")
        ->capture_default_str();
  }

  json to_json() const {
    return json{{"smoothing", smoothing}, {"min_count", min_count}};
  }
};

json effect_report_json(const fairrank::EffectReport& r) {
  return json{{"te_fwd", r.te_fwd},
              {"te_rev", r.te_rev},
              {"se_d_fwd", r.se_d_fwd},
              {"se_d_rev", r.se_d_rev},
              {"se_i_fwd", r.se_i_fwd},
              {"se_i_rev", r.se_i_rev},
              {"mean_score_favorable", r.mean_score_favorable},
              {"de_d_fwd", r.de_d_fwd},
              {"de_d_rev", r.de_d_rev},
              {"de_i_fwd", r.de_i_fwd},
              {"de_i_rev", r.de_i_rev},
              {"tau", r.tau},
              {"judge_d", r.judge_d},
              {"judge_i", r.judge_i}};
}

json plan_json(const fairrank::RepairPlan& p) {
  json means = json::object();
  for (std::size_t v = 0; v < p.var_names.size(); ++v) {
    means[p.var_names[v]] = json{{"original", p.original_means[v]},
                                 {"repaired", p.repaired_means[v]}};
  }
  return json{{"objective_value", p.objective_value},
              {"kkt_residual", p.kkt_residual},
              {"active_constraints", p.active_constraints},
              {"iterations", p.iterations},
              {"tau", p.tau},
              {"means", std::move(means)}};
}

// Scores from the __score column when present, otherwise a fresh fit.
// Non-convergence of the fit is a hard error (exit 3).
fairrank::ScoreAssignment obtain_scores(const fairrank::LoadedData& loaded,
                                        const FitFlags& fit, json* diag_out) {
  if (loaded.scores) {
    if (diag_out) (*diag_out)["score_source"] = "__score column";
    return *loaded.scores;
  }
  auto [scores, diag] = fairrank::fit_scores(loaded.data, fit.config());
  if (!diag.converged) {
    throw fairrank::ConvergenceError(
        "btscore", "gradient norm " + fairrank::format_double(diag.gradient_norm) +
                       " after " + std::to_string(diag.iterations) +
                       " iterations (tol " + fairrank::format_double(fit.tol) + ")");
  }
  if (diag_out) {
    (*diag_out)["score_source"] = "bradley-terry fit";
    (*diag_out)["fit"] = json{{"final_loss", diag.final_loss},
                              {"iterations", diag.iterations},
                              {"gradient_norm", diag.gradient_norm},
                              {"rank_consistent", diag.rank_consistent}};
  }
  return scores;
}

// Model from graph-file params when present, otherwise estimated from data.
fairrank::CausalModel obtain_model(const fairrank::GraphFile& gf,
                                   const fairrank::RankedDataset& data,
                                   const fairrank::ScoreAssignment& scores,
                                   const ModelFlags& mf, json* diag_out) {
  if (gf.model) {
    if (diag_out) (*diag_out)["model_source"] = "graph file params";
    return *gf.model;
  }
  if (diag_out) (*diag_out)["model_source"] = "estimated from data";
  return fairrank::estimate_parameters(data, scores, gf.graph, mf.smoothing,
                                       mf.min_count);
}

fairrank::PathSet indirect_paths_for(const fairrank::CausalGraph& graph,
                                     const std::vector<std::string>& redlining) {
  if (redlining.empty()) return fairrank::all_indirect_path_set(graph);
  return fairrank::redlining_path_set(graph, redlining);
}

int run(int argc, char** argv) {
  CLI::App app{"Causal discrimination discovery and removal for ranked data"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  app.add_option("--seed", seed,
                 "Recorded in every report; the pipeline itself is "
                 "deterministic")
      ->capture_default_str();

  // --- btfit ---------------------------------------------------------------
  auto* btfit = app.add_subcommand(
      "btfit", "Fit Bradley-Terry qualification scores to the ranking");
  std::string bt_data, bt_out, bt_diag;
  RoleFlags bt_roles;
  FitFlags bt_fit;
  btfit->add_option("--data", bt_data, "Ranked CSV")->required();
  btfit->add_option("--out", bt_out, "Scored CSV output")->required();
  btfit->add_option("--diagnostics", bt_diag,
                    "Diagnostics JSON sidecar (default <out>.diag.json)");
  bt_roles.attach(btfit, false);
  bt_fit.attach(btfit);

  // --- learn ---------------------------------------------------------------
  auto* learn = app.add_subcommand(
      "learn", "Learn the causal graph skeleton and orientation (PC search)");
  std::string ln_data, ln_out;
  double ln_alpha = 0.05;
  int ln_max_cond = 3;
  RoleFlags ln_roles;
  FitFlags ln_fit;
  learn->add_option("--data", ln_data, "Ranked or scored CSV")->required();
  learn->add_option("--out", ln_out, "Graph JSON output")->required();
  learn->add_option("--alpha", ln_alpha, "CI test significance level")
      ->capture_default_str();
  learn->add_option("--max-cond", ln_max_cond, "Max conditioning-set size")
      ->capture_default_str();
  ln_roles.attach(learn, true);
  ln_fit.attach(learn);

  // --- fdetect -------------------------------------------------------------
  auto* fdet = app.add_subcommand(
      "fdetect", "Measure direct/indirect discrimination and judge against tau");
  std::string fd_data, fd_graph, fd_out;
  double fd_tau = 0.05;
  RoleFlags fd_roles;
  FitFlags fd_fit;
  ModelFlags fd_model;
  fdet->add_option("--data", fd_data, "Ranked or scored CSV")->required();
  fdet->add_option("--graph", fd_graph, "Graph JSON (structure or full model)")
      ->required();
  fdet->add_option("--out", fd_out, "Report JSON output")->required();
  fdet->add_option("--tau", fd_tau, "Discrimination threshold")
      ->capture_default_str();
  fd_roles.attach(fdet, true);
  fd_fit.attach(fdet);
  fd_model.attach(fdet);

  // --- frank ---------------------------------------------------------------
  auto* frank_cmd = app.add_subcommand(
      "frank", "Detect and repair discrimination, emitting a fair re-ranking");
  std::string fr_data, fr_graph, fr_out, fr_report;
  double fr_tau = 0.05, fr_epsilon = 1e-6;
  RoleFlags fr_roles;
  FitFlags fr_fit;
  ModelFlags fr_model;
  frank_cmd->add_option("--data", fr_data, "Ranked or scored CSV")->required();
  frank_cmd->add_option("--graph", fr_graph, "Graph JSON")->required();
  frank_cmd->add_option("--out", fr_out, "Repaired CSV output")->required();
  frank_cmd->add_option("--report", fr_report, "Report JSON output")->required();
  frank_cmd->add_option("--tau", fr_tau, "Discrimination threshold")
      ->capture_default_str();
  frank_cmd->add_option("--epsilon", fr_epsilon, "Baseline positivity guard")
      ->capture_default_str();
  fr_roles.attach(frank_cmd, true);
  fr_fit.attach(frank_cmd);
  fr_model.attach(frank_cmd);

  // --- threshold -----------------------------------------------------------
  auto* thr = app.add_subcommand(
      "threshold", "Rank-effect budgets guaranteeing a fair thresholded decision");
  std::string th_graph, th_out, th_favorable, th_data;
  double th_theta = 2.0, th_tau = 0.05, th_sigma = 0.0, th_max_score = 0.0;
  bool th_have_max_score = false;
  thr->add_option("--graph", th_graph, "Graph JSON with params")->required();
  thr->add_option("--out", th_out, "Budget JSON output")->required();
  thr->add_option("--favorable", th_favorable, "Favorable protected value")
      ->required();
  thr->add_option("--theta", th_theta, "Score cut-off")->capture_default_str();
  thr->add_option("--tau", th_tau, "Binary-decision tolerance")
      ->capture_default_str();
  thr->add_option("--sigma", th_sigma,
                  "Assume this common sigma instead of requiring equal CG "
                  "sigmas");
  auto* th_ms = thr->add_option("--max-score", th_max_score,
                                "Max observed score (for the indirect budget)");
  thr->add_option("--data", th_data,
                  "Scored CSV to take the max score from instead");
  std::string th_rank_col = "rank";
  thr->add_option("--rank-col", th_rank_col, "Rank column name of --data")
      ->capture_default_str();

  // --- measure -------------------------------------------------------------
  auto* meas = app.add_subcommand(
      "measure", "Kendall tau and Spearman footrule distances between two rankings");
  std::string ms_a, ms_b, ms_out, ms_rank_col = "rank";
  meas->add_option("--a", ms_a, "First CSV")->required();
  meas->add_option("--b", ms_b, "Second CSV (same individuals, same order)")
      ->required();
  meas->add_option("--out", ms_out, "Write JSON here instead of stdout");
  meas->add_option("--rank-col", ms_rank_col, "Rank column name")
      ->capture_default_str();

  // --- parity --------------------------------------------------------------
  auto* par = app.add_subcommand(
      "parity", "Prefix statistical-parity measures rRD / rND / rKL");
  std::string pa_data, pa_out;
  int pa_steps = 10;
  std::vector<int> pa_cuts;
  RoleFlags pa_roles;
  par->add_option("--data", pa_data, "Ranked CSV")->required();
  par->add_option("--out", pa_out, "Report JSON output")->required();
  par->add_option("--steps", pa_steps, "Cut-point spacing (steps, 2*steps, ...)")
      ->capture_default_str();
  par->add_option("--cuts", pa_cuts, "Explicit cut points (comma separated)")
      ->delimiter(',');
  pa_roles.attach(par, true);

  // --- pipeline ------------------------------------------------------------
  auto* pipe = app.add_subcommand(
      "pipeline", "btfit -> (learn | --graph) -> fdetect -> frank");
  std::string pl_data, pl_graph, pl_dir;
  double pl_tau = 0.05, pl_alpha = 0.05, pl_epsilon = 1e-6;
  int pl_max_cond = 3;
  RoleFlags pl_roles;
  FitFlags pl_fit;
  ModelFlags pl_model;
  pipe->add_option("--data", pl_data, "Ranked CSV")->required();
  pipe->add_option("--out-dir", pl_dir, "Output directory (must exist)")
      ->required();
  pipe->add_option("--graph", pl_graph,
                   "Graph JSON; skips structure learning when given");
  pipe->add_option("--tau", pl_tau, "Discrimination threshold")
      ->capture_default_str();
  pipe->add_option("--alpha", pl_alpha, "CI significance for learning")
      ->capture_default_str();
  pipe->add_option("--max-cond", pl_max_cond, "Max conditioning-set size")
      ->capture_default_str();
  pipe->add_option("--epsilon", pl_epsilon, "Baseline positivity guard")
      ->capture_default_str();
  pl_roles.attach(pipe, true);
  pl_fit.attach(pipe);
  pl_model.attach(pipe);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exits 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the error with usage text
    return 1;
  }

  // ---------------------------------------------------------------------
  if (btfit->parsed()) {
    const auto loaded = fairrank::load_ranked_csv(bt_data, bt_roles.roles());
    auto [scores, diag] = fairrank::fit_scores(loaded.data, bt_fit.config());
    fairrank::write_scored_csv(loaded.data, scores, bt_out);
    json j{{"config", json{{"subcommand", "btfit"},
                           {"data", bt_data},
                           {"out", bt_out},
                           {"seed", seed},
                           {"roles", bt_roles.to_json()},
                           {"fit", bt_fit.to_json()}}},
           {"final_loss", diag.final_loss},
           {"iterations", diag.iterations},
           {"gradient_norm", diag.gradient_norm},
           {"converged", diag.converged},
           {"rank_consistent", diag.rank_consistent},
           {"gauge", json{{"shift", scores.gauge.shift},
                          {"scale", scores.gauge.scale}}}};
    fairrank::write_json_file(bt_diag.empty() ? bt_out + ".diag.json" : bt_diag, j);
    if (!diag.converged) {
      throw fairrank::ConvergenceError(
          "btscore", "fit did not reach tol within max_iters (gradient norm " +
                         fairrank::format_double(diag.gradient_norm) + ")");
    }
    return 0;
  }

  if (learn->parsed()) {
    const auto loaded = fairrank::load_ranked_csv(ln_data, ln_roles.roles());
    const auto scores = obtain_scores(loaded, ln_fit, nullptr);
    std::vector<std::string> warnings;
    const auto graph = fairrank::learn_structure(
        loaded.data, scores, fairrank::StructureConfig{ln_alpha, ln_max_cond},
        &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    fairrank::save_graph_file(ln_out, graph);
    return 0;
  }

  if (fdet->parsed()) {
    const auto loaded = fairrank::load_ranked_csv(fd_data, fd_roles.roles());
    json diag;
    const auto scores = obtain_scores(loaded, fd_fit, &diag);
    const auto gf = fairrank::load_graph_file(fd_graph);
    const auto model = obtain_model(gf, loaded.data, scores, fd_model, &diag);
    const auto pi_i = indirect_paths_for(model.graph, fd_roles.redlining);
    const auto report =
        fairrank::fdetect(model, pi_i, fd_roles.favorable, fd_tau);
    json j = effect_report_json(report);
    j["config"] = json{{"subcommand", "fdetect"}, {"data", fd_data},
                       {"graph", fd_graph},       {"out", fd_out},
                       {"tau", fd_tau},           {"seed", seed},
                       {"roles", fd_roles.to_json()},
                       {"fit", fd_fit.to_json()},
                       {"model", fd_model.to_json()}};
    j["diagnostics"] = diag;
    fairrank::write_json_file(fd_out, j);
    return 0;
  }

  if (frank_cmd->parsed()) {
    const auto loaded = fairrank::load_ranked_csv(fr_data, fr_roles.roles());
    json diag;
    const auto scores = obtain_scores(loaded, fr_fit, &diag);
    const auto gf = fairrank::load_graph_file(fr_graph);
    const auto model = obtain_model(gf, loaded.data, scores, fr_model, &diag);
    const auto pi_i = indirect_paths_for(model.graph, fr_roles.redlining);
    const auto result = fairrank::frank(loaded.data, scores, model, pi_i,
                                        fr_roles.favorable, fr_tau, fr_epsilon);

    // Repaired CSV: attributes + new rank, with provenance columns.
    fairrank::RankedDataset out_data(
        loaded.data.attribute_names(), loaded.data.attribute_domains(),
        loaded.data.rows(), result.ranking.new_rank,
        loaded.data.protected_attribute(), loaded.data.favorable_value(),
        loaded.data.redlining_attributes());
    std::vector<std::string> old_rank, old_score, new_score;
    for (std::size_t i = 0; i < loaded.data.size(); ++i) {
      old_rank.push_back(std::to_string(loaded.data.rank_of(i)));
      old_score.push_back(fairrank::format_double(scores.scores[i]));
      new_score.push_back(fairrank::format_double(result.ranking.new_scores[i]));
    }
    fairrank::write_ranked_csv(out_data, fr_out,
                               {{"__score", new_score},
                                {"__old_rank", old_rank},
                                {"__old_score", old_score}});

    const auto ktd =
        fairrank::kendall_tau_distance(loaded.data.rank(), result.ranking.new_rank);
    const auto sfd =
        fairrank::spearman_footrule(loaded.data.rank(), result.ranking.new_rank);
    json j{{"config", json{{"subcommand", "frank"},   {"data", fr_data},
                           {"graph", fr_graph},       {"out", fr_out},
                           {"report", fr_report},     {"tau", fr_tau},
                           {"epsilon", fr_epsilon},   {"seed", seed},
                           {"roles", fr_roles.to_json()},
                           {"fit", fr_fit.to_json()},
                           {"model", fr_model.to_json()}}},
           {"before", effect_report_json(result.before)},
           {"after", effect_report_json(result.after)},
           {"repaired", result.repaired},
           {"distances", json{{"kendall_tau", ktd}, {"spearman_footrule", sfd}}},
           {"diagnostics", diag}};
    if (result.plan) j["plan"] = plan_json(*result.plan);
    fairrank::write_json_file(fr_report, j);
    return 0;
  }

  if (thr->parsed()) {
    const auto gf = fairrank::load_graph_file(th_graph);
    if (!gf.model) {
      throw fairrank::ValidationError(
          "cli", "threshold needs a graph JSON with params");
    }
    const auto ctx = fairrank::make_cutoff_context(*gf.model, th_favorable,
                                                   th_theta, th_tau, th_sigma);
    json j{{"config", json{{"subcommand", "threshold"}, {"graph", th_graph},
                           {"out", th_out},             {"theta", th_theta},
                           {"tau", th_tau},             {"sigma", th_sigma},
                           {"favorable", th_favorable}, {"seed", seed}}}};
    j["binary_direct_effect"] = fairrank::binary_direct_effect(ctx);
    j["binary_indirect_effect"] = fairrank::binary_indirect_effect(ctx);
    j["se_direct_rank"] = fairrank::context_direct_effect(ctx);
    j["se_indirect_rank"] = fairrank::context_indirect_effect(ctx);

    const auto direct = fairrank::rank_budget_for_binary_direct(ctx);
    j["direct"] = json{{"budget", direct.budget},
                       {"t", direct.t},
                       {"alpha_t", direct.alpha_t},
                       {"beta_t", direct.beta_t},
                       {"implication_holds",
                        fairrank::check_direct_budget_implication(ctx)}};

    double max_score = th_max_score;
    bool have_max = !th_ms->empty();
    if (!th_data.empty()) {
      fairrank::ColumnRoles r;
      r.rank_column = th_rank_col;
      // Only the __score column matters here; read it through a throwaway
      // load with the protected role pointing at the graph's protected node.
      const auto loaded = fairrank::load_ranked_csv(
          th_data, [&] {
            fairrank::ColumnRoles rr;
            rr.rank_column = th_rank_col;
            rr.protected_attribute =
                gf.graph.name(gf.graph.protected_node());
            rr.favorable_value = th_favorable;
            return rr;
          }());
      if (!loaded.scores) {
        throw fairrank::ValidationError("cli",
                                        "--data must carry a __score column");
      }
      max_score = *std::max_element(loaded.scores->scores.begin(),
                                    loaded.scores->scores.end());
      have_max = true;
    }
    if (have_max) {
      const auto indirect =
          fairrank::rank_budget_for_binary_indirect(ctx, max_score);
      j["indirect_as_printed"] =
          json{{"budget", indirect.budget},
               {"t", indirect.t},
               {"alpha_t", indirect.alpha_t},
               {"beta_t", indirect.beta_t},
               {"c", indirect.c},
               {"max_score", max_score},
               {"implication_holds",
                fairrank::check_indirect_budget_implication(ctx, max_score)}};
    }
    fairrank::write_json_file(th_out, j);
    return 0;
  }

  if (meas->parsed()) {
    const auto ra = fairrank::read_rank_column(ms_a, ms_rank_col);
    const auto rb = fairrank::read_rank_column(ms_b, ms_rank_col);
    const auto ktd = fairrank::kendall_tau_distance(ra, rb);
    const auto sfd = fairrank::spearman_footrule(ra, rb);
    json j{{"config", json{{"subcommand", "measure"},
                           {"a", ms_a},
                           {"b", ms_b},
                           {"rank_col", ms_rank_col},
                           {"seed", seed}}},
           {"kendall_tau", ktd},
           {"spearman_footrule", sfd}};
    if (ms_out.empty()) {
      std::cout << fairrank::canonical_dump(j);
    } else {
      fairrank::write_json_file(ms_out, j);
    }
    return 0;
  }

  if (par->parsed()) {
    const auto loaded = fairrank::load_ranked_csv(pa_data, pa_roles.roles());
    std::vector<int> cuts = pa_cuts;
    if (cuts.empty() && pa_steps != 10) {
      for (int i = pa_steps; i <= static_cast<int>(loaded.data.size());
           i += pa_steps) {
        cuts.push_back(i);
      }
    }
    const auto report = fairrank::parity_measures(loaded.data, cuts);
    json j{{"config", json{{"subcommand", "parity"},
                           {"data", pa_data},
                           {"out", pa_out},
                           {"steps", pa_steps},
                           {"seed", seed},
                           {"roles", pa_roles.to_json()}}},
           {"cut_points", report.cut_points},
           {"rRD", report.rrd},
           {"rND", report.rnd},
           {"rKL", report.rkl},
           {"normalizer_rRD", report.z_rrd},
           {"normalizer_rND", report.z_rnd},
           {"normalizer_rKL", report.z_rkl},
           {"degenerate", report.degenerate}};
    fairrank::write_json_file(pa_out, j);
    return 0;
  }

  if (pipe->parsed()) {
    const std::string dir = pl_dir + "/";
    const auto loaded = fairrank::load_ranked_csv(pl_data, pl_roles.roles());
    json diag;
    const auto scores = obtain_scores(loaded, pl_fit, &diag);
    fairrank::write_scored_csv(loaded.data, scores, dir + "scored.csv");

    fairrank::GraphFile gf = [&] {
      if (!pl_graph.empty()) return fairrank::load_graph_file(pl_graph);
      std::vector<std::string> warnings;
      auto graph = fairrank::learn_structure(
          loaded.data, scores, fairrank::StructureConfig{pl_alpha, pl_max_cond},
          &warnings);
      for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
      return fairrank::GraphFile{std::move(graph), std::nullopt};
    }();
    const auto model = obtain_model(gf, loaded.data, scores, pl_model, &diag);
    fairrank::save_graph_file(dir + "model.json", model.graph, model);

    const auto pi_i = indirect_paths_for(model.graph, pl_roles.redlining);
    const auto result = fairrank::frank(loaded.data, scores, model, pi_i,
                                        pl_roles.favorable, pl_tau, pl_epsilon);

    fairrank::RankedDataset out_data(
        loaded.data.attribute_names(), loaded.data.attribute_domains(),
        loaded.data.rows(), result.ranking.new_rank,
        loaded.data.protected_attribute(), loaded.data.favorable_value(),
        loaded.data.redlining_attributes());
    std::vector<std::string> old_rank, old_score, new_score;
    for (std::size_t i = 0; i < loaded.data.size(); ++i) {
      old_rank.push_back(std::to_string(loaded.data.rank_of(i)));
      old_score.push_back(fairrank::format_double(scores.scores[i]));
      new_score.push_back(fairrank::format_double(result.ranking.new_scores[i]));
    }
    fairrank::write_ranked_csv(out_data, dir + "repaired.csv",
                               {{"__score", new_score},
                                {"__old_rank", old_rank},
                                {"__old_score", old_score}});

    const auto ktd =
        fairrank::kendall_tau_distance(loaded.data.rank(), result.ranking.new_rank);
    const auto sfd =
        fairrank::spearman_footrule(loaded.data.rank(), result.ranking.new_rank);
    json j{{"config", json{{"subcommand", "pipeline"}, {"data", pl_data},
                           {"graph", pl_graph},        {"out_dir", pl_dir},
                           {"tau", pl_tau},            {"alpha", pl_alpha},
                           {"max_cond", pl_max_cond},  {"epsilon", pl_epsilon},
                           {"seed", seed},             {"roles", pl_roles.to_json()},
                           {"fit", pl_fit.to_json()},  {"model", pl_model.to_json()}}},
           {"before", effect_report_json(result.before)},
           {"after", effect_report_json(result.after)},
           {"repaired", result.repaired},
           {"distances", json{{"kendall_tau", ktd}, {"spearman_footrule", sfd}}},
           {"diagnostics", diag}};
    if (result.plan) j["plan"] = plan_json(*result.plan);
    fairrank::write_json_file(dir + "report.json", j);
    std::cout << fairrank::canonical_dump(
        json{{"repaired", result.repaired},
             {"kendall_tau", ktd},
             {"spearman_footrule", sfd}});
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const fairrank::UnidentifiableError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fairrank::ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const fairrank::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
