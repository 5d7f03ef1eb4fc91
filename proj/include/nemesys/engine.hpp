#ifndef NEMESYS_ENGINE_HPP
#define NEMESYS_ENGINE_HPP

#include <string>

#include "nemesys/grounder.hpp"
#include "nemesys/infer.hpp"
#include "nemesys/meta.hpp"

namespace nemesys {

struct EngineOptions {
  std::string interpreter = "naive";
  GroundingConfig grounding;
  ReasonerConfig reasoner;  // steps == 0 resolves to closure rounds + 2
  int max_steps = 16;
};

// Bundles one lift -> ground pipeline; every driver and learner runs
// through this.
struct Engine {
  Program program;
  MetaProgram mp;
  MetaFactSet lifted;
  GroundSpace space;
  ReasonerConfig reasoner;

  Valuation v0() const { return initial_valuation(space); }
  RuleWeights one_hot() const {
    return RuleWeights::one_hot(static_cast<int>(space.tensors.size()));
  }
  InferResult run() const { return infer(v0(), space.tensors, one_hot(), reasoner); }

  // Valuation of a ground atom after `result`, zero when the atom is
  // outside the ground space (nothing could have derived it).
  double read(const Valuation& v, const Term& atom) const;
};

Engine build_engine(const Program& program, const EngineOptions& opts);

}  // namespace nemesys

#endif
