#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "nemesys/apps.hpp"
#include "nemesys/engine.hpp"
#include "nemesys/learn.hpp"
#include "nemesys/parser.hpp"
#include "nemesys/report.hpp"

using namespace nemesys;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitEngine = 2;

struct CommonArgs {
  double gamma = 0.0;  // 0 = per-command default
  int steps = 0;
  int depth_bound = 0;
  long max_ground_atoms = 0;
  unsigned seed = 0;
  std::string output;
  bool text = false;
  bool dry_run = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--gamma", args.gamma, "softor smoothing parameter");
  cmd->add_option("--t-steps,-T", args.steps, "forward reasoning steps (0 = auto)");
  cmd->add_option("--depth-bound", args.depth_bound, "term depth bound for grounding");
  cmd->add_option("--max-ground-atoms", args.max_ground_atoms, "explosion guard ceiling");
  cmd->add_option("--seed", args.seed, "random seed");
  cmd->add_option("--output,-o", args.output, "write the report to a file");
  cmd->add_flag("--text", args.text, "human-readable output instead of JSON");
  cmd->add_flag("--dry-run", args.dry_run, "validate inputs and report grounding size only");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--program", "cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

long guard_ceiling(const CommonArgs& args) {
  if (args.max_ground_atoms > 0) return args.max_ground_atoms;
  if (const char* env = std::getenv("NEMESYS_MAX_GROUND_ATOMS")) return std::atol(env);
  return GroundingConfig{}.max_ground_atoms;
}

void apply_common(EngineOptions& opts, const CommonArgs& args, double default_gamma) {
  opts.reasoner.gamma = args.gamma > 0.0 ? args.gamma : default_gamma;
  opts.reasoner.steps = args.steps;
  opts.grounding.max_ground_atoms = guard_ceiling(args);
  if (args.depth_bound > 0)
    opts.grounding.term_depth = std::max(opts.grounding.term_depth, args.depth_bound);
}

json config_echo(const CommonArgs& args, const EngineOptions& opts) {
  return {{"interpreter", opts.interpreter},
          {"gamma", opts.reasoner.gamma},
          {"steps", opts.reasoner.steps},
          {"term_depth", opts.grounding.term_depth},
          {"seed", args.seed},
          {"max_ground_atoms", opts.grounding.max_ground_atoms}};
}

int emit(const CommonArgs& args, json report, std::chrono::steady_clock::time_point started) {
  auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started);
  report["timings"] = {{"wall_seconds", elapsed.count()}};
  std::string out = args.text ? render_text(report) : report.dump(2) + "\n";
  if (args.output.empty()) {
    std::cout << out;
  } else {
    std::ofstream f(args.output);
    f << out;
  }
  return kExitOk;
}

// solve: naive (or depth-limited) goal valuations.
int cmd_solve(const std::string& program_path, const std::string& meta,
              const std::string& goal_text, int max_depth, bool trace, bool dump_table,
              int trace_top_k, const CommonArgs& args) {
  auto started = std::chrono::steady_clock::now();
  Program program = parse_program(read_file(program_path));
  Atom goal = parse_atom(goal_text);

  EngineOptions opts;
  opts.interpreter = meta;
  apply_common(opts, args, meta == "naive" ? 1e-3 : 1e-3);
  json payload = json::array();
  json grounding;

  if (meta == "depth") {
    GroundingConfig gcfg = opts.grounding;
    gcfg.li_max_depth = max_depth;
    if (args.dry_run) {
      opts.grounding = gcfg;
      opts.grounding.li_max_depth = max_depth;
      opts.grounding.term_depth = std::max(gcfg.term_depth, max_depth + 2);
      Engine engine = build_engine(program, opts);
      json report = {{"config", config_echo(args, opts)},
                     {"grounding", to_json(engine.space.report)},
                     {"dry_run", true}};
      return emit(args, report, started);
    }
    auto results = solve_depth_limited(program, goal, max_depth, gcfg);
    for (const auto& r : results)
      payload.push_back({{"goal", render(r.goal_instance)}, {"valuation", r.valuation}});
    json report = {{"config", config_echo(args, opts)}, {"results", payload}};
    return emit(args, report, started);
  }

  opts.reasoner.trace = trace;
  Engine engine = build_engine(program, opts);
  opts.reasoner.steps = engine.reasoner.steps;
  grounding = to_json(engine.space.report);
  if (args.dry_run) {
    json report = {{"config", config_echo(args, opts)},
                   {"grounding", grounding},
                   {"dry_run", true}};
    if (dump_table) {
      json table = json::array();
      for (int j = 0; j < engine.space.table.size(); ++j)
        table.push_back({{"index", j}, {"atom", render(engine.space.table.atom(j))}});
      report["table"] = table;
    }
    return emit(args, report, started);
  }
  InferResult run = infer(engine.v0(), engine.space.tensors, engine.one_hot(), engine.reasoner);
  const Valuation& vT = run.valuation;
  Term pattern = Term::compound("solve", {goal.to_term()});
  for (int j = 2; j < engine.space.table.size(); ++j) {
    const Term& atom = engine.space.table.atom(j);
    if (atom.name() != "solve" || atom.arity() != 1) continue;
    if (!unify(pattern, atom, Substitution{})) continue;
    payload.push_back({{"goal", render(atom.args()[0])}, {"valuation", vT[j]}});
  }
  std::sort(payload.begin(), payload.end(), [](const json& a, const json& b) {
    if (a["valuation"] != b["valuation"])
      return a["valuation"].get<double>() > b["valuation"].get<double>();
    return a["goal"].get<std::string>() < b["goal"].get<std::string>();
  });
  json report = {{"config", config_echo(args, opts)},
                 {"grounding", grounding},
                 {"results", payload}};
  if (dump_table) {
    json table = json::array();
    for (int j = 0; j < engine.space.table.size(); ++j)
      table.push_back({{"index", j}, {"atom", render(engine.space.table.atom(j))}});
    report["table"] = table;
  }
  if (trace) {
    // Top-k changed atoms per reasoning step.
    json steps = json::array();
    Valuation prev = engine.v0();
    for (const StepTrace& st : run.traces) {
      std::vector<std::pair<double, int>> deltas;
      Valuation next(prev.size());
      for (size_t j = 0; j < prev.size(); ++j) {
        double now = softor({st.combined[j], prev[j]}, engine.reasoner.gamma,
                            engine.reasoner.clamp);
        if (j == GroundAtomTable::kTop) now = 1.0;
        if (j == GroundAtomTable::kBot) now = 0.0;
        next[j] = now;
        deltas.push_back({-(now - prev[j]), static_cast<int>(j)});
      }
      std::sort(deltas.begin(), deltas.end());
      json changed = json::array();
      for (int i = 0; i < trace_top_k && i < static_cast<int>(deltas.size()); ++i) {
        auto [neg_delta, j] = deltas[i];
        if (-neg_delta <= 0.0) break;
        changed.push_back({{"atom", render(engine.space.table.atom(j))},
                           {"old", prev[j]},
                           {"new", next[j]}});
      }
      steps.push_back(changed);
      prev = next;
    }
    report["trace"] = steps;
  }
  return emit(args, report, started);
}

int cmd_prove(const std::string& program_path, const std::string& goal_text, double threshold,
              int top_k, const CommonArgs& args) {
  auto started = std::chrono::steady_clock::now();
  Program program = parse_program(read_file(program_path));
  EngineOptions opts;
  opts.interpreter = "prooftree";
  apply_common(opts, args, 1e-3);
  Engine engine = build_engine(program, opts);
  opts.reasoner.steps = engine.reasoner.steps;
  if (args.dry_run) {
    json report = {{"config", config_echo(args, opts)},
                   {"grounding", to_json(engine.space.report)},
                   {"dry_run", true}};
    return emit(args, report, started);
  }
  Valuation vT = engine.run().valuation;
  auto proofs = extract_proof(parse_atom(goal_text), vT, engine, 0.0);

  json strong = json::array();
  json weak = json::array();
  int kept = 0;
  for (const ScoredProof& p : proofs) {
    if (p.valuation >= threshold && (top_k <= 0 || kept < top_k)) {
      strong.push_back(to_json(p));
      ++kept;
    } else if (p.valuation < threshold) {
      weak.push_back(to_json(p));
    }
  }
  json report = {{"config", config_echo(args, opts)},
                 {"grounding", to_json(engine.space.report)},
                 {"proofs", strong},
                 {"low_probability_proofs", weak}};
  return emit(args, report, started);
}

int cmd_explain(const std::string& program_path, const std::string& goal_text,
                const std::vector<std::string>& atom_texts, const CommonArgs& args) {
  auto started = std::chrono::steady_clock::now();
  Program program = parse_program(read_file(program_path));
  EngineOptions opts;
  opts.interpreter = "lrp2";
  apply_common(opts, args, 1e-4);
  Engine engine = build_engine(program, opts);
  opts.reasoner.steps = engine.reasoner.steps;
  if (args.dry_run) {
    json report = {{"config", config_echo(args, opts)},
                   {"grounding", to_json(engine.space.report)},
                   {"dry_run", true}};
    return emit(args, report, started);
  }
  Valuation vT = engine.run().valuation;
  std::vector<Term> atoms;
  for (const std::string& t : atom_texts) atoms.push_back(parse_term(t));
  RelevanceReport rel = relevance(parse_atom(goal_text), atoms, vT, engine);
  json report = {{"config", config_echo(args, opts)},
                 {"grounding", to_json(engine.space.report)},
                 {"relevance", to_json(rel)}};
  return emit(args, report, started);
}

int cmd_causal(const std::string& network_path, const std::string& do_text,
               const std::vector<std::string>& query_texts, const CommonArgs& args) {
  auto started = std::chrono::steady_clock::now();
  Program network = parse_program(read_file(network_path));

  std::optional<std::pair<Term, double>> intervention;
  if (!do_text.empty()) {
    auto eq = do_text.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--do", "expected atom=value, got " + do_text);
    intervention = {parse_term(do_text.substr(0, eq)), std::atof(do_text.c_str() + eq + 1)};
  }
  std::vector<Atom> queries;
  for (const std::string& q : query_texts) queries.push_back(parse_atom(q));

  if (args.dry_run) {
    EngineOptions opts;
    opts.interpreter = "causal";
    apply_common(opts, args, 1e-7);
    if (intervention) opts.grounding.do_sites = {intervention->first};
    Engine engine = build_engine(network, opts);
    json report = {{"config", config_echo(args, opts)},
                   {"grounding", to_json(engine.space.report)},
                   {"dry_run", true}};
    return emit(args, report, started);
  }
  CausalRunResult result = run_causal(network, intervention, queries);
  json report = {{"causal", to_json(result)},
                 {"config", {{"interpreter", "causal"}, {"seed", args.seed}}}};
  return emit(args, report, started);
}

int cmd_plan(const std::string& start_path, const std::string& goal_path, int max_moves,
             const CommonArgs& args) {
  auto started = std::chrono::steady_clock::now();
  GridScene start = scene_from_json(read_file(start_path));
  GridScene goal = scene_from_json(read_file(goal_path));
  if (args.dry_run) {
    json report = {{"objects", start.objects.size()},
                   {"max_moves", max_moves},
                   {"dry_run", true}};
    return emit(args, report, started);
  }
  PlanResult result = plan_scene(start, goal, max_moves);
  auto [reached, ok] = validate_plan(start, goal, result);
  json report = {{"plan", to_json(result)},
                 {"validated", ok},
                 {"final_state", json::parse(scene_to_json(reached))}};
  if (!result.found) {
    emit(args, report, started);
    return kExitEngine;
  }
  return emit(args, report, started);
}

int cmd_learn_param(const std::string& network_path, const std::vector<std::string>& target_texts,
                    const std::vector<std::string>& candidate_texts, int steps, double lr,
                    const std::string& loss_log, const CommonArgs& args) {
  auto started = std::chrono::steady_clock::now();
  Program network = parse_program(read_file(network_path));

  std::vector<std::pair<Atom, double>> targets;
  for (const std::string& t : target_texts) {
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--target", "expected atom=prob, got " + t);
    targets.push_back({parse_atom(t.substr(0, eq)), std::atof(t.c_str() + eq + 1)});
  }
  std::vector<Term> candidates;
  for (const std::string& c : candidate_texts) candidates.push_back(parse_term(c));

  LearnConfig cfg;
  cfg.steps = steps;
  cfg.step_size = lr;
  cfg.seed = args.seed;
  if (args.gamma > 0.0) cfg.gamma = args.gamma;
  if (args.steps > 0) cfg.infer_steps = args.steps;

  if (args.dry_run) {
    EngineOptions opts;
    opts.interpreter = "causal";
    opts.grounding.do_sites = candidates;
    apply_common(opts, args, cfg.gamma);
    Engine engine = build_engine(network, opts);
    json report = {{"config", config_echo(args, opts)},
                   {"grounding", to_json(engine.space.report)},
                   {"dry_run", true}};
    return emit(args, report, started);
  }

  DoLearnResult result = learn_do(network, targets, candidates, cfg);
  if (!loss_log.empty()) {
    std::ofstream log(loss_log);
    for (const DoCandidateResult& c : result.candidates)
      for (const LossReport& r : c.trajectory) {
        json line = to_json(r);
        line["site"] = render(c.site);
        log << line.dump() << "\n";
      }
  }
  json report = {{"learning", to_json(result)},
                 {"config", {{"steps", steps}, {"lr", lr}, {"seed", args.seed}}}};
  int code = emit(args, report, started);
  return result.converged ? code : kExitEngine;
}

int cmd_learn_structure(const std::string& program_path, int slots, int iterations, double lr,
                        const CommonArgs& args) {
  auto started = std::chrono::steady_clock::now();
  Program program = parse_program(read_file(program_path));

  EngineOptions opts;
  opts.interpreter = "multitask";
  apply_common(opts, args, 0.01);
  Engine engine = build_engine(program, opts);
  if (args.dry_run) {
    json report = {{"config", config_echo(args, opts)},
                   {"grounding", to_json(engine.space.report)},
                   {"dry_run", true}};
    return emit(args, report, started);
  }

  // Fixed three-phase curriculum over the candidate pool: probability
  // rules, then the naive pair, then the proof-tree pair.
  struct Phase {
    const char* name;
    std::vector<int> rules;
    std::vector<int> contrast;
  };
  std::vector<Phase> phases = {{"causal", {4, 5, 6}, {0, 1, 2, 3}},
                               {"naive", {0, 1}, {2, 3, 4, 5, 6}},
                               {"prooftree", {2, 3}, {0, 1, 4, 5, 6}}};
  std::vector<StructureTask> tasks;
  for (const Phase& phase : phases) {
    StructureTask task;
    task.name = phase.name;
    task.true_rules = phase.rules;
    task.iterations = iterations;
    auto all = subset_targets(engine, phase.rules, phase.contrast, "*");
    for (size_t i = 0; i < all.size(); ++i) {
      if (i % 3 == 2) {
        task.holdout_targets.push_back(all[i]);
      } else {
        task.train_targets.push_back(all[i]);
      }
    }
    tasks.push_back(std::move(task));
  }

  LearnConfig cfg;
  cfg.step_size = lr;
  cfg.seed = args.seed;
  cfg.adam = true;
  if (args.gamma > 0.0) cfg.gamma = args.gamma;
  StructureLearnResult result = learn_structure(engine, slots, tasks, cfg);
  json report = {{"structure", to_json(result)},
                 {"config", {{"slots", slots}, {"iterations", iterations}, {"lr", lr},
                             {"seed", args.seed}}}};
  return emit(args, report, started);
}

int cmd_classify(const std::string& scene_path, const std::string& pattern_path,
                 const std::string& head_text, double threshold, const CommonArgs& args) {
  auto started = std::chrono::steady_clock::now();
  GridScene scene = scene_from_json(read_file(scene_path));
  Program pattern = pattern_path.empty() ? two_pairs_pattern()
                                         : parse_program(read_file(pattern_path));
  Atom head = head_text.empty() ? two_pairs_head() : parse_atom(head_text);
  if (args.dry_run) {
    EngineOptions opts;
    opts.interpreter = "naive";
    apply_common(opts, args, 1e-3);
    Engine engine = build_engine(scene_program(scene, pattern), opts);
    json report = {{"config", config_echo(args, opts)},
                   {"grounding", to_json(engine.space.report)},
                   {"dry_run", true}};
    return emit(args, report, started);
  }
  ClassifyResult result = classify_scene(scene, pattern, head, threshold);
  json report = {{"classification",
                  {{"pattern", render(head)},
                   {"score", result.score},
                   {"label", result.label},
                   {"threshold", threshold}}}};
  return emit(args, report, started);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differentiable meta-interpreter engine"};
  app.require_subcommand(1);

  CommonArgs common;

  // solve
  auto* solve = app.add_subcommand("solve", "forward-chain a goal");
  std::string solve_program, solve_meta = "naive", solve_goal;
  int solve_depth = 3;
  bool solve_trace = false;
  bool solve_dump_table = false;
  int solve_trace_top_k = 10;
  solve->add_option("--program", solve_program, "logic program file")->required();
  solve->add_option("--meta", solve_meta, "interpreter name or meta-program file");
  solve->add_option("--goal", solve_goal, "goal atom")->required();
  solve->add_option("--max-depth", solve_depth, "proof depth budget (depth interpreter)");
  solve->add_flag("--trace", solve_trace, "per-step top-k valuation changes");
  solve->add_option("--trace-top-k", solve_trace_top_k, "entries per trace step");
  solve->add_flag("--dump-table", solve_dump_table, "include the ground atom table");
  add_common(solve, common);

  // prove
  auto* prove = app.add_subcommand("prove", "reason with proof-tree generation");
  std::string prove_program, prove_goal;
  double prove_threshold = 0.5;
  int prove_top_k = 0;
  prove->add_option("--program", prove_program)->required();
  prove->add_option("--goal", prove_goal)->required();
  prove->add_option("--threshold", prove_threshold, "minimum proof valuation");
  prove->add_option("--top-k", prove_top_k, "keep only the k best proofs");
  add_common(prove, common);

  // explain
  auto* explain = app.add_subcommand("explain", "relevance scores per ground atom");
  std::string explain_program, explain_goal;
  std::vector<std::string> explain_atoms;
  explain->add_option("--program", explain_program)->required();
  explain->add_option("--goal", explain_goal)->required();
  explain->add_option("--atom", explain_atoms, "restrict scoring to these atoms");
  add_common(explain, common);

  // causal
  auto* causal = app.add_subcommand("causal", "causal queries with optional intervention");
  std::string causal_network, causal_do;
  std::vector<std::string> causal_queries;
  causal->add_option("--network", causal_network)->required();
  causal->add_option("--do", causal_do, "intervention as atom=value");
  causal->add_option("--query", causal_queries, "query atom")->required();
  add_common(causal, common);

  // plan
  auto* plan = app.add_subcommand("plan", "move objects from a start to a goal scene");
  std::string plan_start, plan_goal;
  int plan_moves = 8;
  plan->add_option("--start", plan_start, "start scene JSON")->required();
  plan->add_option("--goal", plan_goal, "goal scene JSON")->required();
  plan->add_option("--max-moves", plan_moves, "per-axis move budget");
  add_common(plan, common);

  // learn-param
  auto* lp = app.add_subcommand("learn-param", "recover an unobserved intervention");
  std::string lp_network, lp_loss_log;
  std::vector<std::string> lp_targets, lp_candidates;
  int lp_steps = 1000;
  double lp_lr = 0.05;
  lp->add_option("--network", lp_network)->required();
  lp->add_option("--target", lp_targets, "observed probability as atom=prob")->required();
  lp->add_option("--candidate", lp_candidates, "candidate do site")->required();
  lp->add_option("--steps", lp_steps, "gradient steps per candidate");
  lp->add_option("--lr", lp_lr, "step size");
  lp->add_option("--loss-log", lp_loss_log, "line-delimited JSON loss stream");
  add_common(lp, common);

  // learn-structure
  auto* ls = app.add_subcommand("learn-structure", "learn meta-rule weights across tasks");
  std::string ls_program;
  int ls_slots = 3;
  int ls_iters = 200;
  double ls_lr = 0.3;
  ls->add_option("--program", ls_program)->required();
  ls->add_option("--slots", ls_slots, "program size M");
  ls->add_option("--iterations", ls_iters, "iterations per task phase");
  ls->add_option("--lr", ls_lr, "step size");
  add_common(ls, common);

  // classify
  auto* classify = app.add_subcommand("classify", "score a scene against a pattern");
  std::string cl_scene, cl_pattern, cl_head;
  double cl_threshold = 0.5;
  classify->add_option("--scene", cl_scene, "scene JSON file")->required();
  classify->add_option("--pattern", cl_pattern, "pattern rules (default: two pairs)");
  classify->add_option("--head", cl_head, "pattern head atom");
  classify->add_option("--threshold", cl_threshold);
  add_common(classify, common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed())
      return cmd_solve(solve_program, solve_meta, solve_goal, solve_depth, solve_trace,
                       solve_dump_table, solve_trace_top_k, common);
    if (prove->parsed())
      return cmd_prove(prove_program, prove_goal, prove_threshold, prove_top_k, common);
    if (explain->parsed()) return cmd_explain(explain_program, explain_goal, explain_atoms, common);
    if (causal->parsed()) return cmd_causal(causal_network, causal_do, causal_queries, common);
    if (plan->parsed()) return cmd_plan(plan_start, plan_goal, plan_moves, common);
    if (lp->parsed())
      return cmd_learn_param(lp_network, lp_targets, lp_candidates, lp_steps, lp_lr, lp_loss_log,
                             common);
    if (ls->parsed()) return cmd_learn_structure(ls_program, ls_slots, ls_iters, ls_lr, common);
    if (classify->parsed())
      return cmd_classify(cl_scene, cl_pattern, cl_head, cl_threshold, common);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const GroundingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEngine;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEngine;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEngine;
  }
  return kExitUsage;
}
