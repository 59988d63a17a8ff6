#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "provq/value.hpp"

namespace provq {

// ---------------------------------------------------------------------------
// Terms: literals, 1-based positional indices, and operator applications.
// OTimes/OMinus are the abstract annotation-column operators emitted by the
// provenance rewrite; they evaluate against the active annotation structure.
// ---------------------------------------------------------------------------

enum class TermOp : std::uint8_t { Add, Sub, Mul, Div, Concat, OTimes, OMinus };

const char* term_op_name(TermOp op);

struct TermNode;

class Term {
 public:
  struct FuncApp {
    TermOp op;
    std::vector<Term> args;
  };
  using Rep = std::variant<Value, int, FuncApp>;  // int = positional index, 1-based

  static Term literal(Value v);
  static Term column(int index);
  static Term apply(TermOp op, std::vector<Term> args);

  const Rep& rep() const;
  bool is_literal() const;
  bool is_column() const;
  int column_index() const;  // valid only when is_column()

  // Largest positional index referenced (0 if none).
  int max_index() const;

 private:
  explicit Term(std::shared_ptr<const TermNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const TermNode> node_;
};

struct TermNode {
  Term::Rep rep;
};

// ---------------------------------------------------------------------------
// Predicates: Boolean combinations of comparisons between terms.
// ---------------------------------------------------------------------------

enum class CmpOp : std::uint8_t { Eq, Ne, Lt, Le, Gt, Ge };

const char* cmp_op_symbol(CmpOp op);

struct PredNode;

class Predicate {
 public:
  struct Comparison {
    CmpOp op;
    Term lhs;
    Term rhs;
  };
  struct And {
    std::vector<Predicate> parts;
  };
  struct Or {
    std::vector<Predicate> parts;
  };
  struct Not {
    std::vector<Predicate> child;  // exactly one; vector sidesteps recursion limits
  };
  using Rep = std::variant<Comparison, And, Or, Not>;

  static Predicate compare(CmpOp op, Term lhs, Term rhs);
  static Predicate conj(std::vector<Predicate> parts);
  static Predicate disj(std::vector<Predicate> parts);
  static Predicate negate(Predicate p);

  const Rep& rep() const;
  int max_index() const;

 private:
  explicit Predicate(std::shared_ptr<const PredNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const PredNode> node_;
};

struct PredNode {
  Predicate::Rep rep;
};

// ---------------------------------------------------------------------------
// Aggregate functions. Count/Sum/Min/Max are the user-facing monoid
// aggregates. PlusFold and DeltaPlusFold fold an annotation column with the
// structure's plus (and delta); Lift* are the tensor-lifted aggregates of the
// rewritten form, pairing a value term with the annotation column.
// ---------------------------------------------------------------------------

enum class AggKind : std::uint8_t {
  Count,
  Sum,
  Min,
  Max,
  PlusFold,
  DeltaPlusFold,
  LiftCount,
  LiftSum,
  LiftMin,
  LiftMax,
};

const char* agg_kind_name(AggKind kind);
bool agg_is_lifted(AggKind kind);
bool agg_is_fold(AggKind kind);
AggKind agg_lift(AggKind base);
AggKind agg_unlift(AggKind lifted);

struct AggSpec {
  AggKind kind;
  Term term;                  // value term; for folds, the annotation column
  std::optional<Term> annot;  // Lift* only: annotation column term
  std::string name;           // optional display name for the output column
};

// ---------------------------------------------------------------------------
// Query AST. Join and set union are desugared by the parser, so evaluation
// and rewriting only ever see these eight node kinds.
// ---------------------------------------------------------------------------

struct QueryNode;
using QueryPtr = std::shared_ptr<const QueryNode>;

struct RelationRef {
  std::string label;
};
struct Project {
  std::vector<Term> terms;
  QueryPtr child;
};
struct Select {
  Predicate pred;
  QueryPtr child;
};
struct CrossProduct {
  QueryPtr left, right;
};
struct MultisetSum {
  QueryPtr left, right;
};
struct DuplicateElim {
  QueryPtr child;
};
struct MultisetDiff {
  QueryPtr left, right;
};
struct Aggregate {
  std::vector<int> group_cols;  // 1-based positions
  std::vector<AggSpec> aggs;
  QueryPtr child;
};

struct QueryNode {
  using Rep = std::variant<RelationRef, Project, Select, CrossProduct, MultisetSum, DuplicateElim,
                           MultisetDiff, Aggregate>;
  Rep rep;
  // Set on roots produced by the provenance rewrite; guards double rewriting.
  bool provenance_rewritten = false;
};

QueryPtr q_relation(std::string label);
QueryPtr q_project(std::vector<Term> terms, QueryPtr child);
QueryPtr q_select(Predicate pred, QueryPtr child);
QueryPtr q_cross(QueryPtr left, QueryPtr right);
QueryPtr q_msum(QueryPtr left, QueryPtr right);
QueryPtr q_dedup(QueryPtr child);
QueryPtr q_mdiff(QueryPtr left, QueryPtr right);
QueryPtr q_aggregate(std::vector<int> group_cols, std::vector<AggSpec> aggs, QueryPtr child);
// Sugar, desugared immediately.
QueryPtr q_join(Predicate pred, QueryPtr left, QueryPtr right);
QueryPtr q_setunion(QueryPtr left, QueryPtr right);

QueryPtr with_rewrite_marker(QueryPtr q);

// Round-trippable text forms in the surface grammar accepted by the parser.
std::string print_term(const Term& t);
std::string print_predicate(const Predicate& p);
std::string print_query(const QueryPtr& q);

}  // namespace provq
