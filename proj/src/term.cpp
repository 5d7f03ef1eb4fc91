#include "nemesys/term.hpp"

#include <algorithm>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace nemesys {

namespace {

size_t hash_combine(size_t seed, size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

}  // namespace

Term Term::make(Kind kind, std::string name, std::vector<Term> args) {
  auto node = std::make_shared<Node>();
  node->kind = kind;
  node->name = std::move(name);
  node->args = std::move(args);
  size_t h = hash_combine(std::hash<int>()(static_cast<int>(kind)),
                          std::hash<std::string>()(node->name));
  int d = 0;
  bool ground = kind != Kind::Variable;
  for (const Term& a : node->args) {
    h = hash_combine(h, a.hash());
    d = std::max(d, a.depth());
    ground = ground && a.is_ground();
  }
  node->hash = h;
  node->depth = node->args.empty() ? 0 : d + 1;
  node->ground = ground;
  return Term(std::move(node));
}

Term Term::variable(std::string name) { return make(Kind::Variable, std::move(name), {}); }

Term Term::constant(std::string name) { return make(Kind::Constant, std::move(name), {}); }

Term Term::compound(std::string functor, std::vector<Term> args) {
  if (args.empty()) return constant(std::move(functor));
  return make(Kind::Compound, std::move(functor), std::move(args));
}

Term Term::peano(int n) {
  if (n < 0) throw std::invalid_argument("peano: negative literal");
  Term t = constant("0");
  for (int i = 0; i < n; ++i) t = compound("succ", {t});
  return t;
}

Term Term::list(const std::vector<Term>& items) { return list(items, constant("nil")); }

Term Term::list(const std::vector<Term>& items, const Term& tail) {
  Term t = tail;
  for (auto it = items.rbegin(); it != items.rend(); ++it)
    t = compound("cons", {*it, t});
  return t;
}

Term Term::pair(const Term& left, const Term& right) { return compound(",", {left, right}); }

Term Term::conjunction(const std::vector<Term>& parts) {
  if (parts.empty()) return constant("true");
  Term t = parts.back();
  for (auto it = parts.rbegin() + 1; it != parts.rend(); ++it) t = pair(*it, t);
  return t;
}

Term Term::rule(const Term& head, const Term& body) { return compound(":-", {head, body}); }

std::optional<int> Term::peano_value() const {
  int n = 0;
  const Term* t = this;
  while (t->is_compound() && t->name() == "succ" && t->arity() == 1) {
    ++n;
    t = &t->args()[0];
  }
  if (t->is_constant() && t->name() == "0") return n;
  return std::nullopt;
}

bool Term::is_ground() const { return node_->ground; }

int Term::depth() const { return node_->depth; }

void Term::collect_variables(std::vector<std::string>& out) const {
  if (is_variable()) {
    if (std::find(out.begin(), out.end(), name()) == out.end()) out.push_back(name());
    return;
  }
  for (const Term& a : args()) a.collect_variables(out);
}

bool Term::equals(const Term& other) const {
  if (node_ == other.node_) return true;
  if (node_->hash != other.node_->hash) return false;
  if (node_->kind != other.node_->kind || node_->name != other.node_->name ||
      node_->args.size() != other.node_->args.size())
    return false;
  for (size_t i = 0; i < node_->args.size(); ++i)
    if (!node_->args[i].equals(other.node_->args[i])) return false;
  return true;
}

int Term::compare(const Term& other) const {
  if (node_ == other.node_) return 0;
  if (node_->kind != other.node_->kind)
    return static_cast<int>(node_->kind) < static_cast<int>(other.node_->kind) ? -1 : 1;
  if (int c = node_->name.compare(other.node_->name); c != 0) return c < 0 ? -1 : 1;
  if (node_->args.size() != other.node_->args.size())
    return node_->args.size() < other.node_->args.size() ? -1 : 1;
  for (size_t i = 0; i < node_->args.size(); ++i)
    if (int c = node_->args[i].compare(other.node_->args[i]); c != 0) return c;
  return 0;
}

size_t Term::hash() const { return node_->hash; }

bool Atom::is_ground() const {
  for (const Term& a : args)
    if (!a.is_ground()) return false;
  return true;
}

Term Atom::to_term() const { return Term::compound(pred, args); }

Atom Atom::from_term(const Term& t) {
  if (t.is_variable()) throw std::invalid_argument("atom from variable term");
  return Atom(t.name(), t.args());
}

bool Atom::operator==(const Atom& other) const {
  return pred == other.pred && to_term() == other.to_term();
}

Term Clause::body_term() const {
  std::vector<Term> parts;
  parts.reserve(body.size());
  for (const Atom& a : body) parts.push_back(a.to_term());
  return Term::conjunction(parts);
}

const Term* Substitution::lookup(const std::string& var) const {
  auto it = map_.find(var);
  return it == map_.end() ? nullptr : &it->second;
}

Term Substitution::resolve(const Term& t) const {
  Term cur = t;
  while (cur.is_variable()) {
    const Term* bound = lookup(cur.name());
    if (!bound) return cur;
    cur = *bound;
  }
  return cur;
}

Term Substitution::apply(const Term& t) const {
  Term r = resolve(t);
  if (!r.is_compound()) return r;
  std::vector<Term> args;
  args.reserve(r.args().size());
  bool changed = false;
  for (const Term& a : r.args()) {
    args.push_back(apply(a));
    changed = changed || !(args.back() == a);
  }
  if (!changed) return r;
  return Term::compound(r.name(), std::move(args));
}

Atom Substitution::apply(const Atom& a) const {
  std::vector<Term> args;
  args.reserve(a.args.size());
  for (const Term& t : a.args) args.push_back(apply(t));
  return Atom(a.pred, std::move(args));
}

namespace {

bool occurs(const std::string& var, const Term& t, const Substitution& s) {
  Term r = s.resolve(t);
  if (r.is_variable()) return r.name() == var;
  for (const Term& a : r.args())
    if (occurs(var, a, s)) return true;
  return false;
}

bool unify_into(const Term& a, const Term& b, Substitution& s) {
  Term x = s.resolve(a);
  Term y = s.resolve(b);
  if (x.is_variable() && y.is_variable() && x.name() == y.name()) return true;
  if (x.is_variable()) {
    if (occurs(x.name(), y, s)) return false;
    s.bind(x.name(), y);
    return true;
  }
  if (y.is_variable()) {
    if (occurs(y.name(), x, s)) return false;
    s.bind(y.name(), x);
    return true;
  }
  if (x.kind() != y.kind() || x.name() != y.name() || x.arity() != y.arity()) return false;
  for (int i = 0; i < x.arity(); ++i)
    if (!unify_into(x.args()[i], y.args()[i], s)) return false;
  return true;
}

}  // namespace

std::optional<Substitution> unify(const Term& a, const Term& b, const Substitution& subst) {
  Substitution s = subst;
  if (!unify_into(a, b, s)) return std::nullopt;
  return s;
}

std::optional<Substitution> unify(const Atom& a, const Atom& b, const Substitution& subst) {
  if (a.pred != b.pred || a.arity() != b.arity()) return std::nullopt;
  return unify(a.to_term(), b.to_term(), subst);
}

Term rename_variables(const Term& t, const std::string& tag) {
  if (t.is_variable()) return Term::variable(t.name() + tag);
  if (t.is_constant()) return t;
  std::vector<Term> args;
  args.reserve(t.args().size());
  for (const Term& a : t.args()) args.push_back(rename_variables(a, tag));
  return Term::compound(t.name(), std::move(args));
}

Clause rename_variables(const Clause& c, const std::string& tag) {
  Clause out;
  out.weight = c.weight;
  out.head = Atom::from_term(rename_variables(c.head.to_term(), tag));
  for (const Atom& a : c.body) out.body.push_back(Atom::from_term(rename_variables(a.to_term(), tag)));
  return out;
}

namespace {

void render_into(const Term& t, int peano_limit, std::ostream& os);

void render_list(const Term& t, int peano_limit, std::ostream& os) {
  os << '[';
  const Term* cur = &t;
  bool first = true;
  while (cur->is_cons()) {
    if (!first) os << ',';
    render_into(cur->args()[0], peano_limit, os);
    first = false;
    cur = &cur->args()[1];
  }
  if (!cur->is_nil()) {
    os << '|';
    render_into(*cur, peano_limit, os);
  }
  os << ']';
}

void render_into(const Term& t, int peano_limit, std::ostream& os) {
  if (t.is_variable()) {
    os << t.name();
    return;
  }
  if (auto n = t.peano_value(); n && *n > 0) {
    if (*n <= peano_limit) {
      os << *n;
    } else {
      os << "succ(";
      render_into(t.args()[0], peano_limit - 1, os);
      os << ')';
    }
    return;
  }
  if (t.is_cons() || t.is_nil()) {
    render_list(t, peano_limit, os);
    return;
  }
  if (t.is_pair()) {
    os << '(';
    render_into(t.args()[0], peano_limit, os);
    os << ',';
    const Term* rest = &t.args()[1];
    while (rest->is_pair()) {
      render_into(rest->args()[0], peano_limit, os);
      os << ',';
      rest = &rest->args()[1];
    }
    render_into(*rest, peano_limit, os);
    os << ')';
    return;
  }
  if (t.is_rule()) {
    os << '(';
    render_into(t.args()[0], peano_limit, os);
    os << ":-";
    render_into(t.args()[1], peano_limit, os);
    os << ')';
    return;
  }
  os << t.name();
  if (t.is_compound()) {
    os << '(';
    for (int i = 0; i < t.arity(); ++i) {
      if (i) os << ',';
      render_into(t.args()[i], peano_limit, os);
    }
    os << ')';
  }
}

}  // namespace

std::string render(const Term& t, int peano_limit) {
  std::ostringstream os;
  render_into(t, peano_limit, os);
  return os.str();
}

std::string render(const Atom& a, int peano_limit) { return render(a.to_term(), peano_limit); }

std::string render(const Clause& c, int peano_limit) {
  std::ostringstream os;
  if (c.weight != 1.0) {
    os << c.weight << ": ";
  }
  os << render(c.head, peano_limit);
  if (!c.body.empty()) {
    os << " :- ";
    for (size_t i = 0; i < c.body.size(); ++i) {
      if (i) os << ", ";
      os << render(c.body[i], peano_limit);
    }
  }
  os << '.';
  return os.str();
}

}  // namespace nemesys
