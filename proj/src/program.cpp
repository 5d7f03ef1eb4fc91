#include "nemesys/program.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace nemesys {

namespace {

void collect_constants_from(const Term& t, std::set<Term>& out) {
  if (t.is_constant()) {
    out.insert(t);
    return;
  }
  for (const Term& a : t.args()) collect_constants_from(a, out);
}

}  // namespace

const PredicateDecl* Program::find_predicate(const std::string& name, int arity) const {
  for (const auto& p : predicates)
    if (p.name == name && p.arity == arity) return &p;
  return nullptr;
}

const DatatypeDecl* Program::find_datatype(const std::string& name) const {
  for (const auto& d : datatypes)
    if (d.name == name) return &d;
  return nullptr;
}

std::vector<Term> Program::collect_constants() const {
  std::set<Term> out;
  for (const Clause& c : clauses) {
    collect_constants_from(c.head.to_term(), out);
    for (const Atom& b : c.body) collect_constants_from(b.to_term(), out);
  }
  return {out.begin(), out.end()};
}

std::vector<const Clause*> Program::facts() const {
  std::vector<const Clause*> out;
  for (const Clause& c : clauses)
    if (c.is_fact()) out.push_back(&c);
  return out;
}

std::vector<const Clause*> Program::rules() const {
  std::vector<const Clause*> out;
  for (const Clause& c : clauses)
    if (!c.is_fact()) out.push_back(&c);
  return out;
}

void Program::finalize() {
  for (const Clause& c : clauses) {
    if (c.weight < 0.0 || c.weight > 1.0)
      throw std::runtime_error("clause weight outside [0,1]: " + render(c));
  }

  std::set<std::pair<std::string, int>> used;
  for (const Clause& c : clauses) {
    used.insert({c.head.pred, c.head.arity()});
    for (const Atom& b : c.body) used.insert({b.pred, b.arity()});
  }

  // Names the source declared explicitly; using one at an undeclared
  // arity is a mistake, while auto-declared names may overload freely.
  std::set<std::string> declared_names;
  for (const auto& p : predicates) declared_names.insert(p.name);

  for (const auto& [name, arity] : used) {
    const PredicateDecl* decl = find_predicate(name, arity);
    if (decl) continue;
    if (declared_names.count(name))
      throw std::runtime_error("arity mismatch for declared predicate " + name);
    PredicateDecl d;
    d.name = name;
    d.arity = arity;
    d.datatypes.assign(arity, kDefaultDatatype);
    predicates.push_back(std::move(d));
  }

  if (!find_datatype(kDefaultDatatype)) {
    bool needed = false;
    for (const auto& p : predicates)
      for (const auto& dt : p.datatypes) needed = needed || dt == kDefaultDatatype;
    if (needed) {
      DatatypeDecl d;
      d.name = kDefaultDatatype;
      d.pool = collect_constants();
      // Reified helpers never belong in argument pools.
      std::erase_if(d.pool, [](const Term& t) { return t.name() == "true"; });
      if (d.pool.empty()) d.pool.push_back(Term::constant("a"));
      datatypes.push_back(std::move(d));
    }
  }

  for (const auto& p : predicates) {
    if (static_cast<int>(p.datatypes.size()) != p.arity)
      throw std::runtime_error("declaration arity mismatch for " + p.name);
    for (const auto& dt : p.datatypes)
      if (!find_datatype(dt))
        throw std::runtime_error("predicate " + p.name + " uses unknown datatype " + dt);
  }
}

}  // namespace nemesys
