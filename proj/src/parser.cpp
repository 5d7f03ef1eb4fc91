#include "nemesys/parser.hpp"

#include <cctype>
#include <cstdlib>
#include <optional>
#include <vector>

namespace nemesys {

namespace {

enum class TokKind { Ident, Var, Int, Float, Punct, End };

struct Token {
  TokKind kind;
  std::string text;
  int line = 1;
  int column = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) { advance(); }

  const Token& peek() const { return current_; }

  Token next() {
    Token t = current_;
    advance();
    return t;
  }

 private:
  void advance() {
    skip_space();
    current_.line = line_;
    current_.column = column_;
    if (pos_ >= text_.size()) {
      current_ = {TokKind::End, "", line_, column_};
      return;
    }
    char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) step();
      bool is_float = false;
      if (pos_ + 1 < text_.size() && text_[pos_] == '.' &&
          std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))) {
        is_float = true;
        step();
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) step();
      }
      current_.kind = is_float ? TokKind::Float : TokKind::Int;
      current_.text = text_.substr(start, pos_ - start);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        step();
      std::string word = text_.substr(start, pos_ - start);
      bool is_var = std::isupper(static_cast<unsigned char>(word[0])) || word[0] == '_';
      current_.kind = is_var ? TokKind::Var : TokKind::Ident;
      current_.text = std::move(word);
      return;
    }
    if (c == ':' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '-') {
      step();
      step();
      current_ = {TokKind::Punct, ":-", current_.line, current_.column};
      return;
    }
    if (c == ':' && pos_ + 2 < text_.size() && text_[pos_ + 1] == ':' && text_[pos_ + 2] == '-') {
      step();
      step();
      step();
      current_ = {TokKind::Punct, ":-", current_.line, current_.column};
      return;
    }
    step();
    current_ = {TokKind::Punct, std::string(1, c), current_.line, current_.column};
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '%') {
        while (pos_ < text_.size() && text_[pos_] != '\n') step();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        step();
      } else {
        break;
      }
    }
  }

  void step() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  const std::string& text_;
  size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
  Token current_;
};

class Parser {
 public:
  explicit Parser(const std::string& text) : lex_(text) {}

  Program parse_program() {
    Program p;
    while (lex_.peek().kind != TokKind::End) {
      if (lex_.peek().kind == TokKind::Punct && lex_.peek().text == "#") {
        lex_.next();
        parse_directive(p);
      } else {
        p.clauses.push_back(parse_clause());
      }
    }
    p.finalize();
    return p;
  }

  Term parse_single_term() {
    Term t = parse_term_expr();
    expect_end();
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) {
    throw ParseError(msg, lex_.peek().line, lex_.peek().column);
  }

  Token expect_punct(const std::string& text) {
    if (lex_.peek().kind != TokKind::Punct || lex_.peek().text != text)
      fail("expected '" + text + "'");
    return lex_.next();
  }

  bool accept_punct(const std::string& text) {
    if (lex_.peek().kind == TokKind::Punct && lex_.peek().text == text) {
      lex_.next();
      return true;
    }
    return false;
  }

  void expect_end() {
    if (lex_.peek().kind != TokKind::End) fail("trailing input");
  }

  void parse_directive(Program& p) {
    if (lex_.peek().kind != TokKind::Ident) fail("expected directive name after '#'");
    std::string kind = lex_.next().text;
    if (kind == "pred") {
      PredicateDecl d;
      if (lex_.peek().kind != TokKind::Ident) fail("expected predicate name");
      d.name = lex_.next().text;
      expect_punct("/");
      if (lex_.peek().kind != TokKind::Int) fail("expected arity");
      d.arity = std::atoi(lex_.next().text.c_str());
      expect_punct("[");
      while (true) {
        if (lex_.peek().kind != TokKind::Ident) fail("expected datatype name");
        d.datatypes.push_back(lex_.next().text);
        if (!accept_punct(",")) break;
      }
      expect_punct("]");
      expect_punct(".");
      if (static_cast<int>(d.datatypes.size()) != d.arity) fail("datatype list does not match arity");
      p.predicates.push_back(std::move(d));
    } else if (kind == "dtype") {
      DatatypeDecl d;
      if (lex_.peek().kind != TokKind::Ident) fail("expected datatype name");
      d.name = lex_.next().text;
      expect_punct("{");
      while (true) {
        if (lex_.peek().kind == TokKind::Ident) {
          d.pool.push_back(Term::constant(lex_.next().text));
        } else if (lex_.peek().kind == TokKind::Int) {
          d.pool.push_back(Term::peano(std::atoi(lex_.next().text.c_str())));
        } else {
          fail("expected constant in pool");
        }
        if (!accept_punct(",")) break;
      }
      expect_punct("}");
      expect_punct(".");
      p.datatypes.push_back(std::move(d));
    } else {
      fail("unknown directive #" + kind);
    }
  }

  Clause parse_clause() {
    Clause c;
    if (lex_.peek().kind == TokKind::Float || lex_.peek().kind == TokKind::Int) {
      Token w = lex_.next();
      expect_punct(":");
      c.weight = std::atof(w.text.c_str());
      if (c.weight < 0.0 || c.weight > 1.0)
        throw ParseError("weight outside [0,1]", w.line, w.column);
    }
    c.head = parse_atom();
    if (accept_punct(":-")) {
      while (true) {
        c.body.push_back(parse_atom());
        if (!accept_punct(",")) break;
      }
    }
    expect_punct(".");
    return c;
  }

  Atom parse_atom() {
    Term t = parse_term();
    if (t.is_variable()) fail("atom cannot be a variable");
    return Atom::from_term(t);
  }

  // Term with ':-' (lowest) and ',' (next) as infix constructors; only
  // meaningful inside parentheses, where reified clauses and
  // conjunctions live.
  Term parse_term_expr() {
    Term left = parse_comma_expr();
    if (accept_punct(":-")) {
      Term right = parse_term_expr();
      return Term::rule(left, right);
    }
    return left;
  }

  Term parse_comma_expr() {
    std::vector<Term> parts;
    parts.push_back(parse_term());
    while (lex_.peek().kind == TokKind::Punct && lex_.peek().text == ",") {
      lex_.next();
      parts.push_back(parse_term());
    }
    if (parts.size() == 1) return parts[0];
    return Term::conjunction(parts);
  }

  Term parse_term() {
    Term t = parse_primary();
    // `X+n` sugar: n applications of succ.
    if (lex_.peek().kind == TokKind::Punct && lex_.peek().text == "+") {
      lex_.next();
      if (lex_.peek().kind != TokKind::Int) fail("expected integer after '+'");
      int n = std::atoi(lex_.next().text.c_str());
      for (int i = 0; i < n; ++i) t = Term::compound("succ", {t});
    }
    return t;
  }

  Term parse_primary() {
    const Token& tok = lex_.peek();
    switch (tok.kind) {
      case TokKind::Int:
        return Term::peano(std::atoi(lex_.next().text.c_str()));
      case TokKind::Var: {
        std::string name = lex_.next().text;
        if (name == "_") name = "_#" + std::to_string(anon_counter_++);
        return Term::variable(name);
      }
      case TokKind::Ident: {
        std::string name = lex_.next().text;
        if (accept_punct("(")) {
          std::vector<Term> args;
          while (true) {
            args.push_back(parse_term_expr_single());
            if (!accept_punct(",")) break;
          }
          expect_punct(")");
          return Term::compound(name, std::move(args));
        }
        return Term::constant(name);
      }
      case TokKind::Punct:
        if (tok.text == "(") {
          lex_.next();
          Term inner = parse_term_expr();
          expect_punct(")");
          return inner;
        }
        if (tok.text == "[") {
          lex_.next();
          return parse_list();
        }
        fail("unexpected '" + tok.text + "'");
      default:
        fail("unexpected end of input");
    }
  }

  // Argument position: commas separate arguments, so a pair or reified
  // clause argument must be parenthesized. ':-' still binds here so
  // goals like solve(A,(A:-B)) parse.
  Term parse_term_expr_single() {
    Term left = parse_term();
    if (accept_punct(":-")) {
      Term right = parse_term_expr_single();
      return Term::rule(left, right);
    }
    return left;
  }

  Term parse_list() {
    if (accept_punct("]")) return Term::constant("nil");
    std::vector<Term> items;
    items.push_back(parse_term_expr_single());
    while (accept_punct(",")) items.push_back(parse_term_expr_single());
    Term tail = Term::constant("nil");
    if (accept_punct("|")) tail = parse_term_expr_single();
    expect_punct("]");
    return Term::list(items, tail);
  }

  Lexer lex_;
  int anon_counter_ = 0;
};

}  // namespace

Program parse_program(const std::string& text) {
  Parser p(text);
  return p.parse_program();
}

Term parse_term(const std::string& text) {
  Parser p(text);
  return p.parse_single_term();
}

Atom parse_atom(const std::string& text) {
  Term t = parse_term(text);
  if (t.is_variable()) throw ParseError("atom cannot be a variable", 1, 1);
  return Atom::from_term(t);
}

}  // namespace nemesys
