#include "ulab/lang.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <utility>

namespace ulab {

bool is_variable_name(std::string_view name) {
  return name.size() == 1 && std::string_view("xyzuvw").find(name[0]) != std::string_view::npos;
}

bool is_valid_identifier(std::string_view name) {
  if (name.empty() || name[0] < 'a' || name[0] > 'z') return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

Term Term::make(std::string name) {
  if (!is_valid_identifier(name))
    throw std::invalid_argument("malformed term identifier: '" + name + "'");
  TermKind kind = is_variable_name(name) ? TermKind::Variable : TermKind::Constant;
  return Term{std::move(name), kind};
}

Term Term::variable(std::string name) {
  Term t = make(std::move(name));
  if (t.kind != TermKind::Variable)
    throw std::invalid_argument("'" + t.name + "' is not in the variable set");
  return t;
}

Term Term::constant(std::string name) {
  Term t = make(std::move(name));
  if (t.kind != TermKind::Constant)
    throw std::invalid_argument("'" + t.name + "' is a reserved variable name");
  return t;
}

Formula Formula::atom(std::string predicate, std::vector<Term> args) {
  if (!is_valid_identifier(predicate) || is_variable_name(predicate))
    throw std::invalid_argument("malformed predicate identifier: '" + predicate + "'");
  auto node = std::make_shared<Node>();
  node->kind = Kind::Atom;
  node->predicate = std::move(predicate);
  node->args = std::move(args);
  return Formula(std::move(node));
}

Formula Formula::negation(Formula f) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::Negation;
  node->lhs = std::move(f.node_);
  return Formula(std::move(node));
}

Formula Formula::conjunction(Formula lhs, Formula rhs) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::Conjunction;
  node->lhs = std::move(lhs.node_);
  node->rhs = std::move(rhs.node_);
  return Formula(std::move(node));
}

Formula Formula::disjunction(Formula lhs, Formula rhs) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::Disjunction;
  node->lhs = std::move(lhs.node_);
  node->rhs = std::move(rhs.node_);
  return Formula(std::move(node));
}

bool Formula::operator==(const Formula& other) const {
  if (node_ == other.node_) return true;
  if (node_->kind != other.node_->kind) return false;
  switch (node_->kind) {
    case Kind::Atom:
      return node_->predicate == other.node_->predicate && node_->args == other.node_->args;
    case Kind::Negation:
      return child() == other.child();
    case Kind::Conjunction:
    case Kind::Disjunction:
      return left() == other.left() && right() == other.right();
  }
  return false;
}

Question Question::polar(Formula body) {
  return Question{Kind::Polar, std::move(body), std::nullopt, Domain::Closed};
}

Question Question::wh(Term var, Formula body, Domain domain) {
  if (!var.is_variable())
    throw std::invalid_argument("wh question needs a variable, got '" + var.name + "'");
  if (!occurs(body, var)) throw VariableNotInBody(var.name);
  return Question{Kind::Wh, std::move(body), std::move(var), domain};
}

bool Question::operator==(const Question& other) const {
  if (kind != other.kind || body != other.body) return false;
  if (kind == Kind::Wh) return variable == other.variable && domain == other.domain;
  return true;
}

namespace {

// Character-level scanner; offsets are 1-based for error reporting.
class Scanner {
 public:
  explicit Scanner(std::string_view src) : src_(src) {}

  void skip_ws() {
    while (pos_ < src_.size() &&
           (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\r' || src_[pos_] == '\n'))
      ++pos_;
  }

  bool at_end() {
    skip_ws();
    return pos_ >= src_.size();
  }

  char peek() {
    skip_ws();
    return pos_ < src_.size() ? src_[pos_] : '\0';
  }

  std::size_t offset() const { return pos_ + 1; }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c, const char* what) {
    if (!accept(c)) throw SyntaxError(std::string("expected ") + what, offset());
  }

  bool at_ident() {
    skip_ws();
    return pos_ < src_.size() && src_[pos_] >= 'a' && src_[pos_] <= 'z';
  }

  std::string ident() {
    skip_ws();
    if (!at_ident()) throw SyntaxError("expected identifier", offset());
    std::size_t start = pos_;
    while (pos_ < src_.size() && ((src_[pos_] >= 'a' && src_[pos_] <= 'z') ||
                                  (src_[pos_] >= '0' && src_[pos_] <= '9') || src_[pos_] == '_'))
      ++pos_;
    return std::string(src_.substr(start, pos_ - start));
  }

  // Restore point for lookahead.
  std::size_t mark() const { return pos_; }
  void rewind(std::size_t mark) { pos_ = mark; }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : sc_(src) {}

  Formula formula_all() {
    Formula f = disj();
    if (!sc_.at_end()) throw SyntaxError("unexpected trailing input", sc_.offset());
    return f;
  }

  Question question_all() {
    sc_.skip_ws();
    if (!sc_.accept('?')) throw SyntaxError("question must begin with '?'", sc_.offset());
    // Wh form: a variable immediately followed by ':' or 'open:'.
    std::size_t mark = sc_.mark();
    if (sc_.at_ident()) {
      std::size_t ident_at = sc_.offset();
      std::string name = sc_.ident();
      if (is_variable_name(name)) {
        Question::Domain domain = Question::Domain::Closed;
        std::size_t after_var = sc_.mark();
        if (sc_.at_ident()) {
          std::size_t kw_at = sc_.offset();
          std::string kw = sc_.ident();
          if (kw == "open")
            domain = Question::Domain::Open;
          else
            throw SyntaxError("expected 'open' or ':' after wh variable", kw_at);
        } else {
          sc_.rewind(after_var);
        }
        sc_.expect(':', "':' after wh variable");
        Formula body = disj();
        if (!sc_.at_end()) throw SyntaxError("unexpected trailing input", sc_.offset());
        return Question::wh(Term::variable(name), std::move(body), domain);
      }
      (void)ident_at;
      sc_.rewind(mark);
    }
    Formula body = disj();
    if (!sc_.at_end()) throw SyntaxError("unexpected trailing input", sc_.offset());
    return Question::polar(std::move(body));
  }

 private:
  Formula disj() {
    Formula f = conj();
    while (sc_.accept('|')) f = Formula::disjunction(std::move(f), conj());
    return f;
  }

  Formula conj() {
    Formula f = lit();
    while (sc_.accept('&')) f = Formula::conjunction(std::move(f), lit());
    return f;
  }

  Formula lit() {
    if (sc_.accept('~')) return Formula::negation(lit());
    if (sc_.accept('(')) {
      Formula f = disj();
      sc_.expect(')', "')'");
      return f;
    }
    return atom();
  }

  Formula atom() {
    std::size_t at = sc_.offset();
    if (!sc_.at_ident()) throw SyntaxError("expected formula", at);
    std::string pred = sc_.ident();
    if (is_variable_name(pred))
      throw SyntaxError("variable name cannot be used as a predicate", at);
    std::vector<Term> args;
    if (sc_.accept('(')) {
      do {
        std::size_t term_at = sc_.offset();
        if (!sc_.at_ident()) throw SyntaxError("expected term", term_at);
        args.push_back(Term::make(sc_.ident()));
      } while (sc_.accept(','));
      sc_.expect(')', "')' after argument list");
    }
    return Formula::atom(std::move(pred), std::move(args));
  }

  Scanner sc_;
};

void print_term_list(const std::vector<Term>& args, std::string& out) {
  if (args.empty()) return;
  out += '(';
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    out += args[i].name;
  }
  out += ')';
}

// Parenthesize a child exactly when re-parsing would otherwise regroup it.
void print_rec(const Formula& f, std::string& out) {
  switch (f.kind()) {
    case Formula::Kind::Atom:
      out += f.predicate();
      print_term_list(f.args(), out);
      return;
    case Formula::Kind::Negation: {
      out += '~';
      Formula c = f.child();
      bool needs_parens = c.kind() == Formula::Kind::Conjunction ||
                          c.kind() == Formula::Kind::Disjunction;
      if (needs_parens) out += '(';
      print_rec(c, out);
      if (needs_parens) out += ')';
      return;
    }
    case Formula::Kind::Conjunction: {
      Formula l = f.left(), r = f.right();
      bool lp = l.kind() == Formula::Kind::Disjunction;
      bool rp = r.kind() == Formula::Kind::Disjunction || r.kind() == Formula::Kind::Conjunction;
      if (lp) out += '(';
      print_rec(l, out);
      if (lp) out += ')';
      out += " & ";
      if (rp) out += '(';
      print_rec(r, out);
      if (rp) out += ')';
      return;
    }
    case Formula::Kind::Disjunction: {
      Formula l = f.left(), r = f.right();
      bool rp = r.kind() == Formula::Kind::Disjunction;
      print_rec(l, out);
      out += " | ";
      if (rp) out += '(';
      print_rec(r, out);
      if (rp) out += ')';
      return;
    }
  }
}

}  // namespace

Formula parse_formula(std::string_view src) {
  if (src.empty()) throw SyntaxError("empty input", 1);
  return Parser(src).formula_all();
}

Question parse_question(std::string_view src) {
  if (src.empty()) throw SyntaxError("empty input", 1);
  return Parser(src).question_all();
}

std::string print(const Formula& f) {
  std::string out;
  print_rec(f, out);
  return out;
}

std::string print(const Question& q) {
  if (q.kind == Question::Kind::Polar) return "? " + print(q.body);
  std::string out = "?" + q.variable->name;
  if (q.domain == Question::Domain::Open) out += " open";
  out += ": ";
  out += print(q.body);
  return out;
}

Formula substitute(const Formula& f, const Term& var, const Term& c) {
  switch (f.kind()) {
    case Formula::Kind::Atom: {
      std::vector<Term> args = f.args();
      for (Term& t : args)
        if (t == var) t = c;
      return Formula::atom(f.predicate(), std::move(args));
    }
    case Formula::Kind::Negation:
      return Formula::negation(substitute(f.child(), var, c));
    case Formula::Kind::Conjunction:
      return Formula::conjunction(substitute(f.left(), var, c), substitute(f.right(), var, c));
    case Formula::Kind::Disjunction:
      return Formula::disjunction(substitute(f.left(), var, c), substitute(f.right(), var, c));
  }
  return f;
}

bool is_ground(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::Atom:
      return std::none_of(f.args().begin(), f.args().end(),
                          [](const Term& t) { return t.is_variable(); });
    case Formula::Kind::Negation:
      return is_ground(f.child());
    default:
      return is_ground(f.left()) && is_ground(f.right());
  }
}

bool occurs(const Formula& f, const Term& var) {
  switch (f.kind()) {
    case Formula::Kind::Atom:
      return std::any_of(f.args().begin(), f.args().end(),
                         [&](const Term& t) { return t == var; });
    case Formula::Kind::Negation:
      return occurs(f.child(), var);
    default:
      return occurs(f.left(), var) || occurs(f.right(), var);
  }
}

bool is_literal(const Formula& f) {
  if (f.is_atom()) return true;
  return f.kind() == Formula::Kind::Negation && f.child().is_atom();
}

Formula literal_atom(const Formula& f) {
  return f.is_atom() ? f : f.child();
}

bool is_positive_literal(const Formula& f) { return f.is_atom(); }

Formula negated(const Formula& f) {
  if (f.kind() == Formula::Kind::Negation) return f.child();
  return Formula::negation(f);
}

namespace {
void collect_atoms_rec(const Formula& f, std::set<std::string>& seen, std::vector<Formula>& out) {
  switch (f.kind()) {
    case Formula::Kind::Atom:
      if (seen.insert(print(f)).second) out.push_back(f);
      return;
    case Formula::Kind::Negation:
      collect_atoms_rec(f.child(), seen, out);
      return;
    default:
      collect_atoms_rec(f.left(), seen, out);
      collect_atoms_rec(f.right(), seen, out);
  }
}
}  // namespace

std::vector<Formula> collect_atoms(const Formula& f) {
  std::set<std::string> seen;
  std::vector<Formula> out;
  collect_atoms_rec(f, seen, out);
  std::sort(out.begin(), out.end(),
            [](const Formula& a, const Formula& b) { return print(a) < print(b); });
  return out;
}

std::vector<std::string> collect_constants(const Formula& f) {
  std::set<std::string> names;
  for (const Formula& a : collect_atoms(f))
    for (const Term& t : a.args())
      if (!t.is_variable()) names.insert(t.name);
  return {names.begin(), names.end()};
}

}  // namespace ulab
