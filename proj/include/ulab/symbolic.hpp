#ifndef ULAB_SYMBOLIC_HPP
#define ULAB_SYMBOLIC_HPP

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ulab/lang.hpp"

// The symbolic engine: a knowledge base holding categorical facts and rules,
// numeric and comparative credences, independence declarations and stored
// interrogatives, with decision procedures for probabilistic and categorical
// uncertainty and a thresholded assertion policy.

namespace ulab {

class InconsistencyError : public std::runtime_error {
 public:
  explicit InconsistencyError(const std::string& what) : std::runtime_error(what) {}
};

class NoCredalEntry : public std::runtime_error {
 public:
  explicit NoCredalEntry(const std::string& formula)
      : std::runtime_error("no stored or decidable credence for " + formula) {}
};

class TooManyAtoms : public std::runtime_error {
 public:
  explicit TooManyAtoms(std::size_t n)
      : std::runtime_error("formula has " + std::to_string(n) +
                           " atoms; enumeration cap is 20") {}
};

class DepthLimitExceeded : public std::runtime_error {
 public:
  explicit DepthLimitExceeded(int limit)
      : std::runtime_error("resolution depth limit " + std::to_string(limit) + " exceeded") {}
};

// Fixed-point formatting used by every wire interface that carries a credence.
std::string format_credence(double r);

// An atom or negated atom.
struct Literal {
  bool positive = true;
  std::string predicate;
  std::vector<Term> args;

  static Literal from_formula(const Formula& f);  // requires is_literal(f)
  static Literal parse(std::string_view src);
  Formula to_formula() const;
  Literal negated() const;
  bool ground() const;
  std::string key() const;  // canonical text, used as a set key
  bool operator==(const Literal& other) const {
    return positive == other.positive && predicate == other.predicate && args == other.args;
  }
};

// Horn-style rule over literals; heads may be negative. Range-restricted:
// every head variable occurs in the body.
struct Rule {
  std::vector<Literal> body;
  Literal head;

  static Rule make(std::vector<Literal> body, Literal head);
  // "fever(x) & coughs(x) -> flu(x)"
  static Rule parse(std::string_view src);
  std::string key() const;
};

struct CredalEntry {
  Formula body;
  double credence;

  CredalEntry(Formula b, double r);
  std::string key() const { return print(body); }
};

struct ComparativeEntry {
  enum class Relation { Greater, Equal };
  Formula left;
  Relation relation;
  Formula right;

  ComparativeEntry(Formula l, Relation rel, Formula r);
  std::string key() const;
};

struct AssertionPolicy {
  double assert_threshold = 0.95;
};

struct Utterance {
  enum class Kind { FlatAssert, HedgedAssert, Ask, Abstain };
  Kind kind;
  std::optional<Formula> formula;
  std::optional<double> credence;
  std::optional<Question> question;

  static Utterance flat(Formula f);
  static Utterance hedged(Formula f, double r);  // r must lie in (0,1)
  static Utterance ask(Question q);
  static Utterance abstain(Question q);
  std::string wire() const;
};

enum class QueryVerdict { Yes, No, Open };
std::string to_string(QueryVerdict v);

enum class Mode { Explicit, Implicit, None };
enum class UncertaintyKind { Probabilistic, Categorical, None };

struct Classification {
  Mode mode = Mode::None;
  UncertaintyKind kind = UncertaintyKind::None;
  // Set when a stored interrogative is settleable from the current contents:
  // the system is explicitly tokening a question it is in a position to answer.
  bool in_position_to_answer = false;
};

struct PoseResult {
  QueryVerdict verdict;
  std::vector<std::string> witnesses;  // wh-closed yes answers, sorted
  bool stored = false;
};

class KnowledgeBase {
 public:
  // Mutators. A KnowledgeBase is single-writer; concurrent reads of an
  // unmodified instance are safe.
  void add_fact(const Literal& l);
  void add_rule(const Rule& r);
  void integrate_credal(const CredalEntry& e);
  void add_comparative(const ComparativeEntry& e);
  // Atoms in one declaration are mutually independent according to this model.
  void declare_independent(const std::vector<Formula>& atoms);
  void store_question(const Question& q);
  void set_depth_limit(int limit) { depth_limit_ = limit; }

  // Views.
  const std::map<std::string, Literal>& facts() const { return facts_; }
  const std::vector<Rule>& rules() const { return rules_; }
  const std::map<std::string, CredalEntry>& credals() const { return credals_; }
  const std::map<std::string, ComparativeEntry>& comparatives() const { return comparatives_; }
  const std::vector<std::set<std::string>>& independence_sets() const { return indep_sets_; }
  const std::map<std::string, Question>& open_questions() const { return open_questions_; }
  const std::set<std::string>& constants() const { return constants_; }
  bool has_open_question(const Question& q) const {
    return open_questions_.count(print(q)) > 0;
  }
  int depth_limit() const { return depth_limit_; }

  // Stored credence for exactly this formula.
  std::optional<double> credence(const Formula& f) const;
  // Stored credence for f or the complement of its negation's entry.
  std::optional<double> effective_credence(const Formula& f) const;
  // Exact probability of a ground compound by world enumeration over per-atom
  // marginals, when every atom has a stored credence and the atom set falls
  // inside one declared independence set. Pure; does not integrate.
  // Throws TooManyAtoms above 20 atoms.
  std::optional<double> compound_credence(const Formula& f) const;

 private:
  std::map<std::string, Literal> facts_;
  std::vector<Rule> rules_;
  std::set<std::string> rule_keys_;
  std::map<std::string, CredalEntry> credals_;
  std::map<std::string, ComparativeEntry> comparatives_;
  std::vector<std::set<std::string>> indep_sets_;
  std::map<std::string, Question> open_questions_;
  std::set<std::string> constants_;
  int depth_limit_ = 64;

  void note_constants(const Formula& f);
  friend PoseResult pose_query(KnowledgeBase& kb, const Question& q);
};

// Goal-directed resolution over the knowledge base's facts and rules with
// tabling and a cycle guard; terminates on all function-free inputs. The
// table persists across queries, so one Solver can serve many goals cheaply.
// The knowledge base must not change while a Solver is alive.
class Solver {
 public:
  explicit Solver(const KnowledgeBase& kb);
  Solver(const KnowledgeBase& kb, int depth_limit);

  // Ground literal in the least fixpoint of facts under rules?
  bool derivable(const Literal& goal);
  // Yes if goal derives, No if its negation derives, Open if neither.
  // Throws InconsistencyError when both derive.
  QueryVerdict resolve(const Literal& goal);

 private:
  struct Arg {
    int var = -1;          // >= 0 for variables
    std::string constant;  // set when var < 0
    bool is_var() const { return var >= 0; }
  };
  struct Goal {
    bool positive;
    std::string pred;
    std::vector<Arg> args;
  };
  struct Entry {
    std::vector<Goal> answers;  // ground instances found so far
    std::set<std::string> answer_keys;
    bool complete = false;
  };
  struct RuleView {
    Goal head;
    std::vector<Goal> body;
    int var_count = 0;
  };

  const Entry& prove(const Goal& goal, bool& complete);
  void solve_body(const RuleView& rule, const Goal& goal, std::size_t index,
                  std::map<int, Arg>& binding, Entry& entry, bool& clean);
  void add_answer(Entry& entry, const Goal& ground);

  int depth_limit_;
  std::map<std::pair<std::string, bool>, std::vector<Goal>> facts_;
  std::map<std::pair<std::string, bool>, std::vector<RuleView>> rules_;
  std::map<std::string, Entry> table_;
  std::vector<std::string> stack_;
  std::set<std::string> stack_set_;
  bool changed_ = false;
};

// --- decision procedures -------------------------------------------------

// Output ⟨~f, 1-r⟩ from f's stored (or decidable) credence r; the result is
// integrated into kb. Throws NoCredalEntry when no route to r exists.
CredalEntry decide_negation(KnowledgeBase& kb, const Formula& f);

// Exact compound probability, integrated into kb on success; nullopt means
// undetermined (missing marginal or no covering independence declaration).
std::optional<CredalEntry> decide_compound(KnowledgeBase& kb, const Formula& f);

// Comparative uncertainty about f: some stored Pr(f) > Pr(q) and some stored
// Pr(r) > Pr(f). Scans stored comparatives only.
bool comparative_uncertain(const KnowledgeBase& kb, const Formula& f);

// Backward-chained answer for a ground polar literal question.
QueryVerdict resolve_query(const KnowledgeBase& kb, const Question& q);

// Resolves the question; open outcomes are stored into kb (open-domain wh
// questions are stored immediately without search). Wh-closed questions try
// every constant in the signature and report witnesses.
PoseResult pose_query(KnowledgeBase& kb, const Question& q);

// Uncertainty mode and kind for a question against the current kb contents.
// Read-only: never tokens new entries.
Classification classify_mode(const KnowledgeBase& kb, const Question& q);

// Behavioral output for f under the policy: flat assertion past the
// threshold (or on categorical derivability), hedged assertion in the
// nonextreme band, abstention when nothing settles f. A stored or decidable
// credence takes precedence over categorical derivation.
Utterance assertion_policy(const KnowledgeBase& kb, const AssertionPolicy& pol, const Formula& f);

}  // namespace ulab

#endif  // ULAB_SYMBOLIC_HPP
