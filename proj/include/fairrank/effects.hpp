#pragma once

#include "fairrank/graph.hpp"

#include <string>
#include <vector>

namespace fairrank {

enum class PathKind { Direct, IndirectViaRedlining, AllIndirect };

// A set of causal paths from C to S, each stored as a node-index sequence.
struct PathSet {
  PathKind kind = PathKind::AllIndirect;
  std::vector<std::vector<int>> paths;
};

// pi_d: exactly the direct edge C -> S.
PathSet direct_path_set(const CausalGraph& graph);
// All causal paths from C to S except the direct edge.
PathSet all_indirect_path_set(const CausalGraph& graph);
// All causal paths from C to S passing through at least one redlining
// attribute. Redlining names must be profile nodes.
PathSet redlining_path_set(const CausalGraph& graph,
                           const std::vector<std::string>& redlining);

// C's children (excluding S) split by whether C->V starts a path in pi.
struct ChildPartition {
  std::vector<int> v_pi;
  std::vector<int> v_bar;
};

// Throws UnidentifiableError when some child V has C->V starting both a path
// in pi and a causal path to S outside pi (recanting witness): the pi-specific
// effect is then not computable from observational data.
ChildPartition partition_children(const CausalGraph& graph, const PathSet& pi);

// P(q | C=c) for every Q assignment (canonical q-index order), computed by
// exact summation of the CPT product over the full discrete joint, never by
// empirical counting. Enumeration is guarded at 1e6 configurations.
std::vector<double> q_distribution(const CausalModel& model, int c_code);

// E[S | do(C=c)] by full truncated-factorization enumeration over all
// discrete configurations. Serves as the independent oracle for the
// closed-form effect expressions.
double brute_force_intervention(const CausalModel& model,
                                const std::string& c_value);

// E[S | C=c] = sum_q mu_{c,q} P(q|c).
double mean_score_given(const CausalModel& model, const std::string& c_value);

// Total causal effect TE(from, to) = sum_q ( mu_{from,q} P(q|from)
// - mu_{to,q} P(q|to) ).
double total_effect(const CausalModel& model, const std::string& from_value,
                    const std::string& to_value);

// Path-specific effect SE_pi(from, to). The direct set uses the closed form
// sum_q (mu_{from,q} - mu_{to,q}) P(q|to); general sets substitute `from`
// into the CPT reads of v_pi children and `to` everywhere else, then subtract
// E[S | do(to)].
double path_specific_effect(const CausalModel& model, const PathSet& pi,
                            const std::string& from_value,
                            const std::string& to_value);

// Linear coefficients of SE_pi(from, to) in the per-(c,q) means, indexed like
// CgTable::entries. SE = dot(coefficients, means); used by the repair QP.
std::vector<double> path_effect_coefficients(const CausalModel& model,
                                             const PathSet& pi,
                                             const std::string& from_value,
                                             const std::string& to_value);

// Linear coefficients of E[S | C=c] in the per-(c,q) means.
std::vector<double> mean_score_coefficients(const CausalModel& model,
                                            const std::string& c_value);

struct EffectReport {
  double te_fwd = 0, te_rev = 0;
  double se_d_fwd = 0, se_d_rev = 0;
  double se_i_fwd = 0, se_i_rev = 0;
  double mean_score_favorable = 0;  // E[S | c+]
  double de_d_fwd = 0, de_d_rev = 0;
  double de_i_fwd = 0, de_i_rev = 0;
  double tau = 0;
  bool judge_d = false, judge_i = false;
};

// Computes all effects of the protected attribute on the score in both group
// directions and applies the threshold judgment: discrimination is reported
// when either direction's DE exceeds tau. Throws ValidationError when
// E[S|c+] <= 0 (the score gauge makes relative measures meaningless).
EffectReport fdetect(const CausalModel& model, const PathSet& indirect_paths,
                     const std::string& favorable_value, double tau);

}  // namespace fairrank
