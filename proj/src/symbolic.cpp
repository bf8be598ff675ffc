#include "ulab/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <utility>

namespace ulab {

std::string format_credence(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", r);
  return buf;
}

// --- Literal / Rule ---------------------------------------------------------

Literal Literal::from_formula(const Formula& f) {
  if (!is_literal(f)) throw std::invalid_argument("not a literal: " + print(f));
  Formula atom = literal_atom(f);
  return Literal{f.is_atom(), atom.predicate(), atom.args()};
}

Literal Literal::parse(std::string_view src) {
  Formula f = parse_formula(src);
  if (!is_literal(f)) throw SyntaxError("expected a literal", 1);
  return from_formula(f);
}

Formula Literal::to_formula() const {
  Formula atom = Formula::atom(predicate, args);
  return positive ? atom : Formula::negation(atom);
}

Literal Literal::negated() const { return Literal{!positive, predicate, args}; }

bool Literal::ground() const {
  return std::none_of(args.begin(), args.end(), [](const Term& t) { return t.is_variable(); });
}

std::string Literal::key() const { return print(to_formula()); }

Rule Rule::make(std::vector<Literal> body, Literal head) {
  if (body.empty()) throw std::invalid_argument("rule body must be nonempty");
  for (const Term& t : head.args) {
    if (!t.is_variable()) continue;
    bool found = false;
    for (const Literal& b : body)
      for (const Term& bt : b.args)
        if (bt == t) found = true;
    if (!found)
      throw std::invalid_argument("head variable '" + t.name + "' does not occur in the body");
  }
  return Rule{std::move(body), std::move(head)};
}

Rule Rule::parse(std::string_view src) {
  std::size_t arrow = src.find("->");
  if (arrow == std::string_view::npos || src.find("->", arrow + 2) != std::string_view::npos)
    throw SyntaxError("rule must contain exactly one '->'", 1);
  Formula body_f = parse_formula(src.substr(0, arrow));
  Formula head_f = parse_formula(src.substr(arrow + 2));

  // Flatten the conjunction into its literals, left to right.
  std::vector<Formula> parts;
  std::vector<Formula> pending{body_f};
  while (!pending.empty()) {
    Formula f = pending.back();
    pending.pop_back();
    if (f.kind() == Formula::Kind::Conjunction) {
      pending.push_back(f.right());
      pending.push_back(f.left());
    } else {
      parts.push_back(f);
    }
  }
  std::vector<Literal> body;
  for (const Formula& p : parts) {
    if (!is_literal(p)) throw SyntaxError("rule body must be a conjunction of literals", 1);
    body.push_back(Literal::from_formula(p));
  }
  if (!is_literal(head_f)) throw SyntaxError("rule head must be a literal", 1);
  return make(std::move(body), Literal::from_formula(head_f));
}

std::string Rule::key() const {
  std::string out;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (i) out += " & ";
    out += body[i].key();
  }
  out += " -> ";
  out += head.key();
  return out;
}

// --- entries -----------------------------------------------------------------

CredalEntry::CredalEntry(Formula b, double r) : body(std::move(b)), credence(r) {
  if (!(r >= 0.0 && r <= 1.0))
    throw std::invalid_argument("credence " + std::to_string(r) + " outside [0,1]");
  if (!is_ground(body))
    throw std::invalid_argument("credal body must be ground: " + print(body));
}

ComparativeEntry::ComparativeEntry(Formula l, Relation rel, Formula r)
    : left(std::move(l)), relation(rel), right(std::move(r)) {
  if (!is_ground(left) || !is_ground(right))
    throw std::invalid_argument("comparative entries must be ground");
  if (relation == Relation::Greater && print(left) == print(right))
    throw std::invalid_argument("Pr(f) > Pr(f) is not a well-formed comparison");
}

std::string ComparativeEntry::key() const {
  return print(left) + (relation == Relation::Greater ? " > " : " = ") + print(right);
}

// --- Utterance ----------------------------------------------------------------

Utterance Utterance::flat(Formula f) {
  return Utterance{Kind::FlatAssert, std::move(f), std::nullopt, std::nullopt};
}

Utterance Utterance::hedged(Formula f, double r) {
  if (!(r > 0.0 && r < 1.0))
    throw std::invalid_argument("hedged credence must lie strictly in (0,1)");
  return Utterance{Kind::HedgedAssert, std::move(f), r, std::nullopt};
}

Utterance Utterance::ask(Question q) {
  return Utterance{Kind::Ask, std::nullopt, std::nullopt, std::move(q)};
}

Utterance Utterance::abstain(Question q) {
  return Utterance{Kind::Abstain, std::nullopt, std::nullopt, std::move(q)};
}

std::string Utterance::wire() const {
  switch (kind) {
    case Kind::FlatAssert:
      return "ASSERT " + print(*formula);
    case Kind::HedgedAssert:
      return "ASSERT " + print(*formula) + " @ " + format_credence(*credence);
    case Kind::Ask:
      return "ASK " + print(*question);
    case Kind::Abstain:
      return "ABSTAIN " + print(*question);
  }
  return {};
}

std::string to_string(QueryVerdict v) {
  switch (v) {
    case QueryVerdict::Yes: return "yes";
    case QueryVerdict::No: return "no";
    case QueryVerdict::Open: return "open";
  }
  return {};
}

// --- KnowledgeBase --------------------------------------------------------------

void KnowledgeBase::note_constants(const Formula& f) {
  for (const std::string& c : collect_constants(f)) constants_.insert(c);
}

void KnowledgeBase::add_fact(const Literal& l) {
  if (!l.ground()) throw std::invalid_argument("facts must be ground: " + l.key());
  if (facts_.count(l.negated().key()))
    throw InconsistencyError("fact " + l.key() + " contradicts stored " + l.negated().key());
  Formula f = l.to_formula();
  if (auto r = credence(f); r && *r != 1.0)
    throw InconsistencyError("fact " + l.key() + " disagrees with credal entry " +
                             format_credence(*r));
  if (auto r = credence(negated(f)); r && *r != 0.0)
    throw InconsistencyError("fact " + l.key() + " disagrees with credal entry for " +
                             print(negated(f)));
  facts_.emplace(l.key(), l);
  note_constants(f);
}

void KnowledgeBase::add_rule(const Rule& r) {
  if (rule_keys_.insert(r.key()).second) rules_.push_back(r);
  for (const Literal& l : r.body) note_constants(l.to_formula());
  note_constants(r.head.to_formula());
}

void KnowledgeBase::integrate_credal(const CredalEntry& e) {
  if (is_literal(e.body)) {
    Literal lit = Literal::from_formula(e.body);
    if (facts_.count(lit.key()) && e.credence != 1.0)
      throw InconsistencyError("credence " + format_credence(e.credence) + " for stored fact " +
                               lit.key());
    if (facts_.count(lit.negated().key()) && e.credence != 0.0)
      throw InconsistencyError("credence " + format_credence(e.credence) + " for " + lit.key() +
                               " whose negation is a stored fact");
  }
  credals_.insert_or_assign(e.key(), e);
  Formula comp = negated(e.body);
  if (auto it = credals_.find(print(comp)); it != credals_.end())
    it->second = CredalEntry(comp, 1.0 - e.credence);
  note_constants(e.body);
}

void KnowledgeBase::add_comparative(const ComparativeEntry& e) {
  comparatives_.insert_or_assign(e.key(), e);
  note_constants(e.left);
  note_constants(e.right);
}

void KnowledgeBase::declare_independent(const std::vector<Formula>& atoms) {
  std::set<std::string> keys;
  for (const Formula& a : atoms) {
    if (!a.is_atom() || !is_ground(a))
      throw std::invalid_argument("independence declarations take ground atoms");
    keys.insert(print(a));
    note_constants(a);
  }
  if (keys.size() < 2)
    throw std::invalid_argument("an independence set needs at least two atoms");
  indep_sets_.push_back(std::move(keys));
}

void KnowledgeBase::store_question(const Question& q) {
  open_questions_.emplace(print(q), q);
  note_constants(q.body);
}

std::optional<double> KnowledgeBase::credence(const Formula& f) const {
  auto it = credals_.find(print(f));
  if (it == credals_.end()) return std::nullopt;
  return it->second.credence;
}

std::optional<double> KnowledgeBase::effective_credence(const Formula& f) const {
  if (auto r = credence(f)) return r;
  if (auto r = credence(negated(f))) return 1.0 - *r;
  return std::nullopt;
}

namespace {

bool eval_under(const Formula& f, const std::map<std::string, bool>& world) {
  switch (f.kind()) {
    case Formula::Kind::Atom:
      return world.at(print(f));
    case Formula::Kind::Negation:
      return !eval_under(f.child(), world);
    case Formula::Kind::Conjunction:
      return eval_under(f.left(), world) && eval_under(f.right(), world);
    case Formula::Kind::Disjunction:
      return eval_under(f.left(), world) || eval_under(f.right(), world);
  }
  return false;
}

}  // namespace

std::optional<double> KnowledgeBase::compound_credence(const Formula& f) const {
  if (!is_ground(f)) throw std::invalid_argument("compound credence needs a ground formula");
  std::vector<Formula> atoms = collect_atoms(f);
  if (atoms.size() > 20) throw TooManyAtoms(atoms.size());

  std::vector<double> marginals;
  for (const Formula& a : atoms) {
    auto r = effective_credence(a);
    if (!r) return std::nullopt;
    marginals.push_back(*r);
  }
  if (atoms.size() > 1) {
    bool covered = false;
    for (const auto& set : indep_sets_) {
      bool all = true;
      for (const Formula& a : atoms)
        if (!set.count(print(a))) all = false;
      if (all) covered = true;
    }
    if (!covered) return std::nullopt;
  }

  const std::size_t n = atoms.size();
  double total = 0.0;
  for (std::size_t world = 0; world < (std::size_t{1} << n); ++world) {
    double weight = 1.0;
    std::map<std::string, bool> assignment;
    for (std::size_t i = 0; i < n; ++i) {
      bool truth = (world >> i) & 1;
      assignment[print(atoms[i])] = truth;
      weight *= truth ? marginals[i] : 1.0 - marginals[i];
    }
    if (eval_under(f, assignment)) total += weight;
  }
  return total;
}

// --- Solver ----------------------------------------------------------------------

namespace {

// Variable bindings: var id -> either another var (first >= 0) or a constant
// (first == -1). Chains are chased on lookup.
struct Subst {
  std::map<int, std::pair<int, std::string>> map;

  std::pair<int, std::string> resolve(std::pair<int, std::string> a) const {
    while (a.first >= 0) {
      auto it = map.find(a.first);
      if (it == map.end()) break;
      a = it->second;
    }
    return a;
  }

  bool unify(std::pair<int, std::string> a, std::pair<int, std::string> b) {
    a = resolve(a);
    b = resolve(b);
    if (a.first >= 0) {
      if (b.first == a.first) return true;
      map[a.first] = b;
      return true;
    }
    if (b.first >= 0) {
      map[b.first] = a;
      return true;
    }
    return a.second == b.second;
  }
};

}  // namespace

Solver::Solver(const KnowledgeBase& kb) : Solver(kb, kb.depth_limit()) {}

Solver::Solver(const KnowledgeBase& kb, int depth_limit) : depth_limit_(depth_limit) {
  auto to_goal = [](const Literal& l, std::map<std::string, int>& vars, int& next) {
    Goal g;
    g.positive = l.positive;
    g.pred = l.predicate;
    for (const Term& t : l.args) {
      Arg a;
      if (t.is_variable()) {
        auto [it, fresh] = vars.emplace(t.name, next);
        if (fresh) ++next;
        a.var = it->second;
      } else {
        a.constant = t.name;
      }
      g.args.push_back(std::move(a));
    }
    return g;
  };

  for (const auto& [key, fact] : kb.facts()) {
    (void)key;
    std::map<std::string, int> vars;
    int next = 0;
    facts_[{fact.predicate, fact.positive}].push_back(to_goal(fact, vars, next));
  }
  for (const Rule& r : kb.rules()) {
    std::map<std::string, int> vars;
    int next = 0;
    RuleView view;
    view.head = to_goal(r.head, vars, next);
    for (const Literal& l : r.body) view.body.push_back(to_goal(l, vars, next));
    view.var_count = next;
    rules_[{r.head.predicate, r.head.positive}].push_back(std::move(view));
  }
}

namespace {

std::string canon_goal_text(bool positive, const std::string& pred,
                            const std::vector<std::pair<bool, std::string>>& parts) {
  std::string key = positive ? "" : "~";
  key += pred;
  key += '(';
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) key += ',';
    if (parts[i].first) key += '$';
    key += parts[i].second;
  }
  key += ')';
  return key;
}

}  // namespace

void Solver::add_answer(Entry& entry, const Goal& ground) {
  std::vector<std::pair<bool, std::string>> parts;
  for (const Arg& a : ground.args) parts.emplace_back(false, a.constant);
  std::string key = canon_goal_text(ground.positive, ground.pred, parts);
  if (entry.answer_keys.insert(key).second) {
    entry.answers.push_back(ground);
    changed_ = true;
  }
}

const Solver::Entry& Solver::prove(const Goal& goal, bool& complete) {
  // Canonical table key: variables renumbered by first occurrence, so p(x,y)
  // and p(y,x) share an entry while p(x,x) keeps its own.
  std::map<int, int> renumber;
  std::vector<std::pair<bool, std::string>> parts;
  for (const Arg& a : goal.args) {
    if (a.is_var()) {
      auto [it, fresh] = renumber.emplace(a.var, static_cast<int>(renumber.size()));
      (void)fresh;
      parts.emplace_back(true, std::to_string(it->second));
    } else {
      parts.emplace_back(false, a.constant);
    }
  }
  const std::string key = canon_goal_text(goal.positive, goal.pred, parts);

  Entry& entry = table_[key];
  if (entry.complete) {
    complete = true;
    return entry;
  }
  if (stack_set_.count(key)) {
    // In-progress goal: hand back the partial answers gathered so far.
    complete = false;
    return entry;
  }
  if (static_cast<int>(stack_.size()) >= depth_limit_) throw DepthLimitExceeded(depth_limit_);

  stack_.push_back(key);
  stack_set_.insert(key);
  bool clean = true;

  auto value_of = [](const Arg& a) {
    return a.is_var() ? std::pair<int, std::string>{a.var, {}}
                      : std::pair<int, std::string>{-1, a.constant};
  };

  if (auto fit = facts_.find({goal.pred, goal.positive}); fit != facts_.end()) {
    for (const Goal& fact : fit->second) {
      if (fact.args.size() != goal.args.size()) continue;
      Subst binding;
      bool ok = true;
      for (std::size_t i = 0; ok && i < goal.args.size(); ++i)
        ok = binding.unify(value_of(goal.args[i]), value_of(fact.args[i]));
      if (ok) add_answer(entry, fact);
    }
  }

  if (auto rit = rules_.find({goal.pred, goal.positive}); rit != rules_.end()) {
    for (const RuleView& rule : rit->second) {
      if (rule.head.args.size() != goal.args.size()) continue;
      // Rename rule variables above the goal's ids.
      int offset = 0;
      for (const Arg& a : goal.args)
        if (a.is_var()) offset = std::max(offset, a.var + 1);
      auto shifted = [offset, &value_of](const Arg& a) {
        auto v = value_of(a);
        if (v.first >= 0) v.first += offset;
        return v;
      };
      Subst binding;
      bool ok = true;
      for (std::size_t i = 0; ok && i < goal.args.size(); ++i)
        ok = binding.unify(value_of(goal.args[i]), shifted(rule.head.args[i]));
      if (!ok) continue;

      // Walk the body left to right, branching on each sub-answer.
      struct Frame {
        std::size_t index;
        Subst binding;
      };
      std::vector<Frame> work{{0, binding}};
      while (!work.empty()) {
        Frame frame = std::move(work.back());
        work.pop_back();
        if (frame.index == rule.body.size()) {
          Goal answer;
          answer.positive = goal.positive;
          answer.pred = goal.pred;
          bool ground = true;
          for (const Arg& a : goal.args) {
            auto v = frame.binding.resolve(value_of(a));
            if (v.first >= 0) ground = false;
            Arg out;
            out.constant = v.second;
            answer.args.push_back(std::move(out));
          }
          if (ground) add_answer(entry, answer);
          continue;
        }
        const Goal& body_lit = rule.body[frame.index];
        Goal sub;
        sub.positive = body_lit.positive;
        sub.pred = body_lit.pred;
        for (const Arg& a : body_lit.args) {
          auto v = frame.binding.resolve(shifted(a));
          Arg out;
          if (v.first >= 0)
            out.var = v.first;
          else
            out.constant = v.second;
          sub.args.push_back(std::move(out));
        }
        bool sub_complete = false;
        std::vector<Goal> answers = prove(sub, sub_complete).answers;  // copy: table grows
        clean = clean && sub_complete;
        for (const Goal& ans : answers) {
          Subst next = frame.binding;
          bool match = ans.args.size() == sub.args.size();
          for (std::size_t i = 0; match && i < sub.args.size(); ++i)
            match = next.unify(value_of(sub.args[i]), value_of(ans.args[i]));
          if (match) work.push_back({frame.index + 1, std::move(next)});
        }
      }
    }
  }

  stack_.pop_back();
  stack_set_.erase(key);
  if (clean) entry.complete = true;
  complete = entry.complete;
  return entry;
}

bool Solver::derivable(const Literal& goal) {
  if (!goal.ground()) throw std::invalid_argument("derivable() takes a ground literal");
  Goal g;
  g.positive = goal.positive;
  g.pred = goal.predicate;
  for (const Term& t : goal.args) {
    Arg a;
    a.constant = t.name;
    g.args.push_back(std::move(a));
  }
  std::vector<std::pair<bool, std::string>> parts;
  for (const Arg& a : g.args) parts.emplace_back(false, a.constant);
  const std::string self = canon_goal_text(g.positive, g.pred, parts);

  // Iterate to a fixpoint: cycle-guarded passes may under-report until the
  // table stops growing.
  while (true) {
    changed_ = false;
    bool complete = false;
    const Entry& e = prove(g, complete);
    if (e.answer_keys.count(self)) return true;
    if (complete || !changed_) return false;
  }
}

QueryVerdict Solver::resolve(const Literal& goal) {
  bool pos = derivable(goal);
  bool neg = derivable(goal.negated());
  if (pos && neg) throw InconsistencyError("both " + goal.key() + " and its negation derive");
  if (pos) return QueryVerdict::Yes;
  if (neg) return QueryVerdict::No;
  return QueryVerdict::Open;
}

// --- operations ----------------------------------------------------------------

CredalEntry decide_negation(KnowledgeBase& kb, const Formula& f) {
  std::optional<double> r = kb.credence(f);
  if (!r) r = kb.compound_credence(f);
  if (!r) throw NoCredalEntry(print(f));
  CredalEntry out(negated(f), 1.0 - *r);
  kb.integrate_credal(out);
  return out;
}

std::optional<CredalEntry> decide_compound(KnowledgeBase& kb, const Formula& f) {
  std::optional<double> r = kb.compound_credence(f);
  if (!r) return std::nullopt;
  CredalEntry out(f, *r);
  kb.integrate_credal(out);
  return out;
}

bool comparative_uncertain(const KnowledgeBase& kb, const Formula& f) {
  const std::string key = print(f);
  bool not_null = false, not_maximal = false;
  for (const auto& [k, e] : kb.comparatives()) {
    (void)k;
    if (e.relation != ComparativeEntry::Relation::Greater) continue;
    if (print(e.left) == key) not_null = true;
    if (print(e.right) == key) not_maximal = true;
  }
  return not_null && not_maximal;
}

QueryVerdict resolve_query(const KnowledgeBase& kb, const Question& q) {
  if (q.kind != Question::Kind::Polar)
    throw std::invalid_argument("resolve_query takes a polar question");
  if (!is_literal(q.body) || !is_ground(q.body))
    throw std::invalid_argument("resolve_query needs a ground literal body: " + print(q.body));
  Solver solver(kb);
  return solver.resolve(Literal::from_formula(q.body));
}

PoseResult pose_query(KnowledgeBase& kb, const Question& q) {
  if (q.kind == Question::Kind::Polar) {
    QueryVerdict v = resolve_query(kb, q);
    if (v == QueryVerdict::Open) {
      kb.store_question(q);
      return {v, {}, true};
    }
    return {v, {}, false};
  }

  if (q.domain == Question::Domain::Open) {
    // No candidate-answer set: integrate the interrogative as-is.
    kb.store_question(q);
    return {QueryVerdict::Open, {}, true};
  }

  if (!is_literal(q.body))
    throw std::invalid_argument("wh search needs a literal body: " + print(q.body));
  Solver solver(kb);
  std::vector<std::string> witnesses;
  bool all_no = !kb.constants().empty();
  for (const std::string& c : kb.constants()) {
    Formula grounded = substitute(q.body, *q.variable, Term::constant(c));
    if (!is_ground(grounded))
      throw std::invalid_argument("wh body has variables besides the wh variable: " +
                                  print(q.body));
    QueryVerdict v = solver.resolve(Literal::from_formula(grounded));
    if (v == QueryVerdict::Yes) witnesses.push_back(c);
    if (v != QueryVerdict::No) all_no = false;
  }
  if (!witnesses.empty()) return {QueryVerdict::Yes, witnesses, false};
  if (all_no) return {QueryVerdict::No, {}, false};
  kb.store_question(q);
  return {QueryVerdict::Open, {}, true};
}

namespace {

bool wh_closed_settled(const KnowledgeBase& kb, const Question& q) {
  if (!is_literal(q.body)) return false;
  Solver solver(kb);
  for (const std::string& c : kb.constants()) {
    Formula grounded = substitute(q.body, *q.variable, Term::constant(c));
    if (!is_ground(grounded)) return false;
    if (solver.resolve(Literal::from_formula(grounded)) == QueryVerdict::Yes) return true;
  }
  return false;
}

}  // namespace

Classification classify_mode(const KnowledgeBase& kb, const Question& q) {
  if (q.kind == Question::Kind::Wh) {
    bool stored = kb.has_open_question(q);
    bool settled = q.domain == Question::Domain::Closed && wh_closed_settled(kb, q);
    if (stored) {
      if (settled) return {Mode::None, UncertaintyKind::None, true};
      return {Mode::Explicit, UncertaintyKind::Categorical, false};
    }
    if (settled) return {Mode::None, UncertaintyKind::None, false};
    return {Mode::Implicit, UncertaintyKind::Categorical, false};
  }

  const Formula& f = q.body;
  if (!is_ground(f)) throw std::invalid_argument("classify_mode needs a ground polar body");

  std::optional<double> r = kb.effective_credence(f);
  if (r && *r > 0.0 && *r < 1.0) return {Mode::Explicit, UncertaintyKind::Probabilistic, false};

  if (kb.has_open_question(q)) {
    if (is_literal(f) && resolve_query(kb, q) != QueryVerdict::Open)
      return {Mode::None, UncertaintyKind::None, true};
    return {Mode::Explicit, UncertaintyKind::Categorical, false};
  }
  if (comparative_uncertain(kb, f)) return {Mode::Explicit, UncertaintyKind::Categorical, false};

  if (r) return {Mode::None, UncertaintyKind::None, false};  // settled by an extreme credence

  if (auto dc = kb.compound_credence(f)) {
    if (*dc > 0.0 && *dc < 1.0) return {Mode::Implicit, UncertaintyKind::Probabilistic, false};
    return {Mode::None, UncertaintyKind::None, false};
  }
  if (is_literal(f) && resolve_query(kb, q) == QueryVerdict::Open)
    return {Mode::Implicit, UncertaintyKind::Categorical, false};
  return {Mode::None, UncertaintyKind::None, false};
}

Utterance assertion_policy(const KnowledgeBase& kb, const AssertionPolicy& pol,
                           const Formula& f) {
  std::optional<double> r = kb.effective_credence(f);
  if (!r) r = kb.compound_credence(f);
  if (r) {
    if (*r > pol.assert_threshold || *r >= 1.0) return Utterance::flat(f);
    if (*r < 1.0 - pol.assert_threshold || *r <= 0.0) return Utterance::flat(negated(f));
    return Utterance::hedged(f, *r);
  }
  if (is_literal(f)) {
    switch (resolve_query(kb, Question::polar(f))) {
      case QueryVerdict::Yes: return Utterance::flat(f);
      case QueryVerdict::No: return Utterance::flat(negated(f));
      case QueryVerdict::Open: break;
    }
  }
  return Utterance::abstain(Question::polar(f));
}

}  // namespace ulab
