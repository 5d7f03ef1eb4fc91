#ifndef NEMESYS_TERM_HPP
#define NEMESYS_TERM_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace nemesys {

// First-order term: variable, constant, or compound. Constants are 0-ary
// compounds kept as a separate kind so callers can switch on them cheaply.
// Nodes are immutable and shared; copying a Term is a pointer copy.
class Term {
 public:
  enum class Kind { Variable, Constant, Compound };

  Term() : Term(constant("nil")) {}

  static Term variable(std::string name);
  static Term constant(std::string name);
  static Term compound(std::string functor, std::vector<Term> args);

  // Peano numeral of depth n: 0, succ(0), succ(succ(0)), ...
  static Term peano(int n);
  // List sugar: cons/nil chain, optionally with a non-nil tail.
  static Term list(const std::vector<Term>& items);
  static Term list(const std::vector<Term>& items, const Term& tail);
  // Right-nested ','(a, ','(b, c)) conjunction of two or more parts.
  static Term pair(const Term& left, const Term& right);
  static Term conjunction(const std::vector<Term>& parts);
  // Reified clause ':-'(head, body).
  static Term rule(const Term& head, const Term& body);

  Kind kind() const { return node_->kind; }
  bool is_variable() const { return node_->kind == Kind::Variable; }
  bool is_constant() const { return node_->kind == Kind::Constant; }
  bool is_compound() const { return node_->kind == Kind::Compound; }

  const std::string& name() const { return node_->name; }
  const std::vector<Term>& args() const { return node_->args; }
  int arity() const { return static_cast<int>(node_->args.size()); }

  bool is_pair() const { return is_compound() && name() == "," && arity() == 2; }
  bool is_rule() const { return is_compound() && name() == ":-" && arity() == 2; }
  bool is_nil() const { return is_constant() && name() == "nil"; }
  bool is_cons() const { return is_compound() && name() == "cons" && arity() == 2; }

  // Depth of a Peano numeral, or nullopt if the term is not one.
  std::optional<int> peano_value() const;

  bool is_ground() const;
  // Max functor nesting: constants/variables are 0, f(t...) is 1 + max.
  int depth() const;
  void collect_variables(std::vector<std::string>& out) const;

  bool equals(const Term& other) const;
  // Total order used for deterministic enumeration.
  int compare(const Term& other) const;
  size_t hash() const;

  bool operator==(const Term& other) const { return equals(other); }
  bool operator!=(const Term& other) const { return !equals(other); }
  bool operator<(const Term& other) const { return compare(other) < 0; }

 private:
  struct Node {
    Kind kind;
    std::string name;
    std::vector<Term> args;
    size_t hash = 0;
    int depth = 0;
    bool ground = false;
  };

  explicit Term(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  static Term make(Kind kind, std::string name, std::vector<Term> args);

  std::shared_ptr<const Node> node_;
};

struct TermHash {
  size_t operator()(const Term& t) const { return t.hash(); }
};

// Predicate application. An Atom is structurally the same as a compound
// term; the wrapper keeps head/body positions of clauses typed.
struct Atom {
  std::string pred;
  std::vector<Term> args;

  Atom() = default;
  Atom(std::string p, std::vector<Term> a) : pred(std::move(p)), args(std::move(a)) {}

  int arity() const { return static_cast<int>(args.size()); }
  bool is_ground() const;
  Term to_term() const;
  static Atom from_term(const Term& t);

  bool operator==(const Atom& other) const;
};

// Definite clause with an optional probabilistic weight. A fact is a
// clause with an empty body.
struct Clause {
  Atom head;
  std::vector<Atom> body;
  double weight = 1.0;

  bool is_fact() const { return body.empty(); }
  // Body as a right-nested ','-conjunction; `true` for facts.
  Term body_term() const;
};

// Variable binding map. Bindings may refer to other bound variables;
// `resolve` follows chains, `apply` substitutes exhaustively.
class Substitution {
 public:
  bool contains(const std::string& var) const { return map_.count(var) > 0; }
  const Term* lookup(const std::string& var) const;
  void bind(const std::string& var, const Term& value) { map_[var] = value; }

  // Follow variable chains until a non-variable or unbound variable.
  Term resolve(const Term& t) const;
  // Full structural substitution; ground output iff all variables bound.
  Term apply(const Term& t) const;
  Atom apply(const Atom& a) const;

  size_t size() const { return map_.size(); }
  const std::map<std::string, Term>& bindings() const { return map_; }

 private:
  std::map<std::string, Term> map_;
};

// Most general unifier extending `subst`, with occurs-check. Returns
// nullopt on clash or cycle; `subst` is left unchanged on failure.
std::optional<Substitution> unify(const Term& a, const Term& b, const Substitution& subst);
std::optional<Substitution> unify(const Atom& a, const Atom& b, const Substitution& subst);

// Rename all variables apart by suffixing `tag`; used before matching a
// clause against goals so distinct activations never share variables.
Term rename_variables(const Term& t, const std::string& tag);
Clause rename_variables(const Clause& c, const std::string& tag);

// Text form. Peano chains up to `peano_limit` render as integer literals,
// cons/nil chains as [..] lists, pairs as (a,b), reified clauses as
// (h:-b). render/parse round-trip structurally.
std::string render(const Term& t, int peano_limit = 64);
std::string render(const Atom& a, int peano_limit = 64);
std::string render(const Clause& c, int peano_limit = 64);

}  // namespace nemesys

#endif
