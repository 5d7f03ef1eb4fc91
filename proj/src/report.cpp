#include "nemesys/report.hpp"

#include <sstream>

namespace nemesys {

using nlohmann::json;

json to_json(const GroundingReport& report) {
  json per_pred = json::object();
  for (const auto& [pred, count] : report.atoms_per_predicate) per_pred[pred] = count;
  return {{"object_atoms", report.object_atoms},
          {"ground_atoms", report.ground_atoms},
          {"closure_rounds", report.closure_rounds},
          {"clause_instances", report.clause_instances},
          {"dropped_depth", report.dropped_depth},
          {"dropped_sort", report.dropped_sort},
          {"max_substitutions", report.max_substitutions},
          {"max_body_len", report.max_body_len},
          {"atoms_per_predicate", per_pred}};
}

json to_json(const ScoredProof& proof) {
  std::function<json(const ProofTree&)> walk = [&](const ProofTree& node) -> json {
    json j = {{"goal", render(node.goal)}, {"fact", node.leaf}};
    if (!node.leaf) {
      json kids = json::array();
      for (const ProofTree& c : node.children) kids.push_back(walk(c));
      j["children"] = kids;
    }
    return j;
  };
  return {{"valuation", proof.valuation},
          {"proof_term", render(proof.proof_term)},
          {"tree", walk(proof.tree)},
          {"rendered", proof.tree.pretty()}};
}

json to_json(const RelevanceReport& report) {
  json scores = json::array();
  for (const auto& [atom, score] : report.scores)
    scores.push_back({{"atom", render(atom)}, {"score", score}});
  json proofs = json::array();
  for (const Term& p : report.proofs) proofs.push_back(render(p));
  return {{"goal", render(report.goal)}, {"scores", scores}, {"proofs", proofs}};
}

json to_json(const CausalRunResult& result) {
  json queries = json::array();
  for (const CausalQuery& q : result.queries) {
    json jq = {{"query", render(q.query)}, {"probability", q.pre}};
    if (q.post) jq["intervened_probability"] = *q.post;
    queries.push_back(jq);
  }
  json j = {{"queries", queries}};
  if (result.site) {
    j["do_site"] = render(*result.site);
    j["do_value"] = result.intervention_value;
  }
  return j;
}

json to_json(const PlanResult& result) {
  json plans = json::array();
  for (const AxisPlan& p : result.plans) {
    plans.push_back({{"object", p.object_id},
                     {"axis", p.horizontal ? "horizontal" : "vertical"},
                     {"actions", p.actions},
                     {"valuation", p.valuation}});
  }
  return {{"found", result.found}, {"plans", plans}, {"unreachable", result.unreachable}};
}

json to_json(const LossReport& report) {
  json params = json::object();
  for (const auto& [k, v] : report.params) params[k] = v;
  return {{"iteration", report.iteration},
          {"loss", report.loss},
          {"grad_norm", report.grad_norm},
          {"params", params}};
}

json to_json(const DoLearnResult& result) {
  json candidates = json::array();
  for (const DoCandidateResult& c : result.candidates) {
    json traj = json::array();
    for (const LossReport& r : c.trajectory) traj.push_back(to_json(r));
    candidates.push_back({{"site", render(c.site)},
                          {"final_loss", c.final_loss},
                          {"learned_value", c.learned_value},
                          {"trajectory", traj}});
  }
  json j = {{"candidates", candidates}, {"converged", result.converged}};
  if (result.winner >= 0) {
    j["winner"] = render(result.candidates[result.winner].site);
    j["winner_value"] = result.candidates[result.winner].learned_value;
  }
  return j;
}

json to_json(const StructureLearnResult& result) {
  json phases = json::array();
  for (const StructurePhaseResult& p : result.phases) {
    json weights = json::object();
    for (const auto& [rule, w] : p.true_rule_weight) weights[std::to_string(rule)] = w;
    json traj = json::array();
    for (const LossReport& r : p.trajectory) traj.push_back(to_json(r));
    phases.push_back({{"task", p.task},
                      {"selection", p.selection},
                      {"tied", p.slot_tied},
                      {"true_rule_weights", weights},
                      {"holdout_accuracy", p.holdout_accuracy},
                      {"trajectory", traj}});
  }
  return {{"phases", phases}, {"logits", result.weights.logits}};
}

namespace {

void render_value(const json& value, const std::string& prefix, std::ostringstream& os) {
  if (value.is_object()) {
    for (const auto& [k, v] : value.items()) render_value(v, prefix + "." + k, os);
  } else if (value.is_array()) {
    int i = 0;
    for (const auto& v : value) render_value(v, prefix + "[" + std::to_string(i++) + "]", os);
  } else {
    os << prefix << " = " << value.dump() << "\n";
  }
}

}  // namespace

std::string render_text(const json& report) {
  std::ostringstream os;
  for (const auto& [k, v] : report.items()) render_value(v, k, os);
  return os.str();
}

}  // namespace nemesys
