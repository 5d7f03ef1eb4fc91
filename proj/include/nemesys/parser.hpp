#ifndef NEMESYS_PARSER_HPP
#define NEMESYS_PARSER_HPP

#include <stdexcept>
#include <string>

#include "nemesys/program.hpp"
#include "nemesys/term.hpp"

namespace nemesys {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, int line, int column)
      : std::runtime_error(message + " at line " + std::to_string(line) + ", column " +
                           std::to_string(column)),
        line(line),
        column(column) {}

  int line;
  int column;
};

// Parse a full program text. Statements are `.`-terminated; `%` starts a
// line comment. Integer literals become Peano terms, `[..]` becomes a
// cons/nil chain, and omitted weights default to 1.0. The returned
// program is finalized (declarations checked, defaults filled in).
Program parse_program(const std::string& text);

// Parse a single term / atom, e.g. a goal from the command line.
Term parse_term(const std::string& text);
Atom parse_atom(const std::string& text);

}  // namespace nemesys

#endif
