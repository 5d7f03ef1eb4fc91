#ifndef NEMESYS_PROGRAM_HPP
#define NEMESYS_PROGRAM_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nemesys/term.hpp"

namespace nemesys {

// Name of the datatype assigned to argument positions of undeclared
// predicates; its pool is every constant appearing in the program.
inline constexpr const char* kDefaultDatatype = "__default";

struct DatatypeDecl {
  std::string name;
  std::vector<Term> pool;
};

struct PredicateDecl {
  std::string name;
  int arity = 0;
  std::vector<std::string> datatypes;
};

// Parsed logic program: datatype pools, predicate declarations and
// weighted clauses. `finalize` auto-declares anything the source left
// implicit; most paper-style programs declare nothing.
struct Program {
  std::vector<DatatypeDecl> datatypes;
  std::vector<PredicateDecl> predicates;
  std::vector<Clause> clauses;

  const PredicateDecl* find_predicate(const std::string& name, int arity) const;
  const DatatypeDecl* find_datatype(const std::string& name) const;

  // Auto-declare undeclared predicates (all positions on the default
  // datatype), build the default pool, and check arities against
  // declarations. Throws std::runtime_error on violations.
  void finalize();

  // All constants appearing anywhere in the clauses.
  std::vector<Term> collect_constants() const;

  // Predicates of object facts (zero-body clauses) in clause order.
  std::vector<const Clause*> facts() const;
  std::vector<const Clause*> rules() const;
};

}  // namespace nemesys

#endif
