#ifndef ULAB_LANG_HPP
#define ULAB_LANG_HPP

#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// The formula/question language shared by every engine in the lab: a small
// function-free logic with atoms, ~, & and |, plus polar and wh-interrogatives.

namespace ulab {

// Raised on malformed input; offset is the 1-based character position.
class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(const std::string& message, std::size_t offset)
      : std::runtime_error(message + " (at offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Raised when a wh-question's variable does not occur in its body.
class VariableNotInBody : public std::runtime_error {
 public:
  explicit VariableNotInBody(const std::string& var)
      : std::runtime_error("wh variable '" + var + "' does not occur in the body") {}
};

enum class TermKind { Variable, Constant };

// The variable set is fixed: single-character x, y, z, u, v, w.
bool is_variable_name(std::string_view name);
bool is_valid_identifier(std::string_view name);

struct Term {
  std::string name;
  TermKind kind;

  // Kind is fully determined by the name; throws std::invalid_argument on a
  // malformed identifier.
  static Term make(std::string name);
  static Term variable(std::string name);
  static Term constant(std::string name);

  bool is_variable() const { return kind == TermKind::Variable; }
  bool operator==(const Term& other) const {
    return name == other.name && kind == other.kind;
  }
};

// Immutable recursive formula value. Copies are cheap (shared structure).
class Formula {
 public:
  enum class Kind { Atom, Negation, Conjunction, Disjunction };

  static Formula atom(std::string predicate, std::vector<Term> args = {});
  static Formula negation(Formula f);
  static Formula conjunction(Formula lhs, Formula rhs);
  static Formula disjunction(Formula lhs, Formula rhs);

  Kind kind() const { return node_->kind; }
  bool is_atom() const { return node_->kind == Kind::Atom; }

  // Atom accessors; undefined for non-atoms.
  const std::string& predicate() const { return node_->predicate; }
  const std::vector<Term>& args() const { return node_->args; }

  // Negation child.
  Formula child() const { return Formula(node_->lhs); }
  // Binary children.
  Formula left() const { return Formula(node_->lhs); }
  Formula right() const { return Formula(node_->rhs); }

  bool operator==(const Formula& other) const;
  bool operator!=(const Formula& other) const { return !(*this == other); }

 private:
  struct Node {
    Kind kind;
    std::string predicate;       // Atom
    std::vector<Term> args;      // Atom
    std::shared_ptr<const Node> lhs;  // Negation child / binary left
    std::shared_ptr<const Node> rhs;  // binary right
  };

  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

struct Question {
  enum class Kind { Polar, Wh };
  enum class Domain { Closed, Open };

  Kind kind;
  Formula body;
  std::optional<Term> variable;  // Wh only
  Domain domain = Domain::Closed;

  static Question polar(Formula body);
  // Throws VariableNotInBody if var does not occur in body.
  static Question wh(Term var, Formula body, Domain domain);

  bool operator==(const Question& other) const;
  bool operator!=(const Question& other) const { return !(*this == other); }
};

// Parsers. Grammar (precedence ~ > & > |, left-associative):
//   formula  := disj ; disj := conj ("|" conj)* ; conj := lit ("&" lit)* ;
//   lit      := "~" lit | "(" formula ")" | atom ;
//   atom     := IDENT [ "(" term ("," term)* ")" ] ; term := IDENT ;
//   question := "?" formula | "?" VAR ["open"] ":" formula
// Predicate identifiers may not be variable names; this keeps the question
// grammar unambiguous.
Formula parse_formula(std::string_view src);
Question parse_question(std::string_view src);

// Canonical printer: single spaces around binary connectives, no redundant
// parentheses. parse(print(v)) == v.
std::string print(const Formula& f);
std::string print(const Question& q);

// Every occurrence of var replaced by the constant c.
Formula substitute(const Formula& f, const Term& var, const Term& c);

bool is_ground(const Formula& f);
bool occurs(const Formula& f, const Term& var);

// True for atoms and negated atoms.
bool is_literal(const Formula& f);
// The atom under an optional negation; requires is_literal.
Formula literal_atom(const Formula& f);
bool is_positive_literal(const Formula& f);

// Logical complement with double-negation stripped: ~p for p, p for ~p.
Formula negated(const Formula& f);

// Distinct atoms of f, sorted by canonical print.
std::vector<Formula> collect_atoms(const Formula& f);

// Distinct constant names occurring in f, sorted.
std::vector<std::string> collect_constants(const Formula& f);

}  // namespace ulab

#endif  // ULAB_LANG_HPP
