#include "nemesys/engine.hpp"

#include <algorithm>
#include <stdexcept>

namespace nemesys {

namespace {

// Longest stratified derivation depth under boolean semantics: rounds
// until the tensor pipeline, read as hard logic, reaches its fixpoint.
int boolean_depth(const GroundSpace& space) {
  std::vector<char> truth(space.table.size(), 0);
  truth[GroundAtomTable::kTop] = 1;
  for (const SeedValue& s : space.seeds)
    if (s.value > 0.0) truth[s.index] = 1;
  truth[GroundAtomTable::kBot] = 0;

  int depth = 0;
  for (int round = 1; round <= 64; ++round) {
    bool changed = false;
    for (const IndexTensor& t : space.tensors) {
      for (int j = 0; j < t.num_atoms; ++j) {
        if (truth[j]) continue;
        for (int k = 0; k < t.num_subst && !truth[j]; ++k) {
          bool all = true;
          for (int l = 0; l < t.body_len && all; ++l) all = truth[t.at(j, k, l)] != 0;
          if (all) {
            truth[j] = 1;
            changed = true;
          }
        }
      }
    }
    if (!changed) break;
    depth = round;
  }
  return depth;
}

}  // namespace

double Engine::read(const Valuation& v, const Term& atom) const {
  auto idx = space.table.find(atom);
  if (!idx) return 0.0;
  return v[*idx];
}

Engine build_engine(const Program& program, const EngineOptions& opts) {
  for (const Clause& c : program.clauses) {
    if (is_reserved_predicate(c.head.pred))
      throw std::invalid_argument("object program defines the reserved predicate " +
                                  c.head.pred);
  }
  Engine e;
  e.program = program;
  e.mp = load_interpreter(opts.interpreter);
  e.lifted = lift_program(e.program);
  e.space = build_ground_space(e.mp, e.program, e.lifted, opts.grounding);
  e.reasoner = opts.reasoner;
  if (e.reasoner.steps <= 0)
    e.reasoner.steps = std::min(opts.max_steps, boolean_depth(e.space) + 2);
  return e;
}

}  // namespace nemesys
