#include "provq/ast.hpp"

#include <algorithm>

#include "provq/errors.hpp"

namespace provq {

const char* term_op_name(TermOp op) {
  switch (op) {
    case TermOp::Add: return "add";
    case TermOp::Sub: return "sub";
    case TermOp::Mul: return "mul";
    case TermOp::Div: return "div";
    case TermOp::Concat: return "concat";
    case TermOp::OTimes: return "otimes";
    case TermOp::OMinus: return "ominus";
  }
  return "?";
}

Term Term::literal(Value v) {
  return Term(std::make_shared<TermNode>(TermNode{Rep(std::move(v))}));
}

Term Term::column(int index) {
  if (index < 1) raise(Errc::IndexOutOfRange, "positional index must be >= 1");
  return Term(std::make_shared<TermNode>(TermNode{Rep(index)}));
}

Term Term::apply(TermOp op, std::vector<Term> args) {
  return Term(std::make_shared<TermNode>(TermNode{Rep(FuncApp{op, std::move(args)})}));
}

const Term::Rep& Term::rep() const { return node_->rep; }
bool Term::is_literal() const { return std::holds_alternative<Value>(node_->rep); }
bool Term::is_column() const { return std::holds_alternative<int>(node_->rep); }
int Term::column_index() const { return std::get<int>(node_->rep); }

int Term::max_index() const {
  if (is_column()) return column_index();
  if (const auto* f = std::get_if<FuncApp>(&node_->rep)) {
    int m = 0;
    for (const auto& a : f->args) m = std::max(m, a.max_index());
    return m;
  }
  return 0;
}

const char* cmp_op_symbol(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

Predicate Predicate::compare(CmpOp op, Term lhs, Term rhs) {
  return Predicate(
      std::make_shared<PredNode>(PredNode{Rep(Comparison{op, std::move(lhs), std::move(rhs)})}));
}

Predicate Predicate::conj(std::vector<Predicate> parts) {
  if (parts.size() == 1) return parts[0];
  return Predicate(std::make_shared<PredNode>(PredNode{Rep(And{std::move(parts)})}));
}

Predicate Predicate::disj(std::vector<Predicate> parts) {
  if (parts.size() == 1) return parts[0];
  return Predicate(std::make_shared<PredNode>(PredNode{Rep(Or{std::move(parts)})}));
}

Predicate Predicate::negate(Predicate p) {
  return Predicate(std::make_shared<PredNode>(PredNode{Rep(Not{{std::move(p)}})}));
}

const Predicate::Rep& Predicate::rep() const { return node_->rep; }

int Predicate::max_index() const {
  return std::visit(
      [](const auto& n) -> int {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Comparison>) {
          return std::max(n.lhs.max_index(), n.rhs.max_index());
        } else if constexpr (std::is_same_v<T, Not>) {
          return n.child[0].max_index();
        } else {
          int m = 0;
          for (const auto& p : n.parts) m = std::max(m, p.max_index());
          return m;
        }
      },
      node_->rep);
}

const char* agg_kind_name(AggKind kind) {
  switch (kind) {
    case AggKind::Count: return "count";
    case AggKind::Sum: return "sum";
    case AggKind::Min: return "min";
    case AggKind::Max: return "max";
    case AggKind::PlusFold: return "oplus";
    case AggKind::DeltaPlusFold: return "deltaoplus";
    case AggKind::LiftCount: return "lift_count";
    case AggKind::LiftSum: return "lift_sum";
    case AggKind::LiftMin: return "lift_min";
    case AggKind::LiftMax: return "lift_max";
  }
  return "?";
}

bool agg_is_lifted(AggKind kind) {
  return kind == AggKind::LiftCount || kind == AggKind::LiftSum || kind == AggKind::LiftMin ||
         kind == AggKind::LiftMax;
}

bool agg_is_fold(AggKind kind) {
  return kind == AggKind::PlusFold || kind == AggKind::DeltaPlusFold;
}

AggKind agg_lift(AggKind base) {
  switch (base) {
    case AggKind::Count: return AggKind::LiftCount;
    case AggKind::Sum: return AggKind::LiftSum;
    case AggKind::Min: return AggKind::LiftMin;
    case AggKind::Max: return AggKind::LiftMax;
    default: raise(Errc::DomainMismatch, "not a liftable aggregate");
  }
}

AggKind agg_unlift(AggKind lifted) {
  switch (lifted) {
    case AggKind::LiftCount: return AggKind::Count;
    case AggKind::LiftSum: return AggKind::Sum;
    case AggKind::LiftMin: return AggKind::Min;
    case AggKind::LiftMax: return AggKind::Max;
    default: raise(Errc::DomainMismatch, "not a lifted aggregate");
  }
}

namespace {

QueryPtr make_node(QueryNode::Rep rep) {
  auto n = std::make_shared<QueryNode>();
  n->rep = std::move(rep);
  return n;
}

}  // namespace

QueryPtr q_relation(std::string label) { return make_node(RelationRef{std::move(label)}); }

QueryPtr q_project(std::vector<Term> terms, QueryPtr child) {
  return make_node(Project{std::move(terms), std::move(child)});
}

QueryPtr q_select(Predicate pred, QueryPtr child) {
  return make_node(Select{std::move(pred), std::move(child)});
}

QueryPtr q_cross(QueryPtr left, QueryPtr right) {
  return make_node(CrossProduct{std::move(left), std::move(right)});
}

QueryPtr q_msum(QueryPtr left, QueryPtr right) {
  return make_node(MultisetSum{std::move(left), std::move(right)});
}

QueryPtr q_dedup(QueryPtr child) { return make_node(DuplicateElim{std::move(child)}); }

QueryPtr q_mdiff(QueryPtr left, QueryPtr right) {
  return make_node(MultisetDiff{std::move(left), std::move(right)});
}

QueryPtr q_aggregate(std::vector<int> group_cols, std::vector<AggSpec> aggs, QueryPtr child) {
  return make_node(Aggregate{std::move(group_cols), std::move(aggs), std::move(child)});
}

QueryPtr q_join(Predicate pred, QueryPtr left, QueryPtr right) {
  return q_select(std::move(pred), q_cross(std::move(left), std::move(right)));
}

QueryPtr q_setunion(QueryPtr left, QueryPtr right) {
  return q_dedup(q_msum(std::move(left), std::move(right)));
}

QueryPtr with_rewrite_marker(QueryPtr q) {
  auto n = std::make_shared<QueryNode>(*q);
  n->provenance_rewritten = true;
  return n;
}

// ---------------------------------------------------------------------------
// Printing (the inverse of the parser)
// ---------------------------------------------------------------------------

namespace {

std::string escape_text(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  out += "\"";
  return out;
}

std::string print_literal(const Value& v) {
  switch (v.tag()) {
    case ValueTag::Int:
    case ValueTag::Bool:
      return v.to_string();
    case ValueTag::Real: {
      std::string s = v.to_string();
      // Keep reals lexically distinct from ints on round trips.
      if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
          s.find("inf") == std::string::npos) {
        s += ".0";
      }
      return s;
    }
    case ValueTag::Text:
      return escape_text(v.as_text());
    case ValueTag::Date:
      return "date \"" + v.as_date() + "\"";
    default:
      raise(Errc::TagMismatch, "annotation values cannot appear as query literals");
  }
}

// additive < multiplicative < atom
int term_precedence(const Term& t) {
  if (const auto* f = std::get_if<Term::FuncApp>(&t.rep())) {
    switch (f->op) {
      case TermOp::Add:
      case TermOp::Sub:
        return 0;
      case TermOp::Mul:
      case TermOp::Div:
        return 1;
      default:
        return 2;  // functional syntax
    }
  }
  return 2;
}

std::string print_term_prec(const Term& t, int parent_prec) {
  std::string out = std::visit(
      [](const auto& rep) -> std::string {
        using T = std::decay_t<decltype(rep)>;
        if constexpr (std::is_same_v<T, Value>) {
          return print_literal(rep);
        } else if constexpr (std::is_same_v<T, int>) {
          return "#" + std::to_string(rep);
        } else {
          switch (rep.op) {
            case TermOp::Add:
              return print_term_prec(rep.args[0], 0) + " + " + print_term_prec(rep.args[1], 1);
            case TermOp::Sub:
              return print_term_prec(rep.args[0], 0) + " - " + print_term_prec(rep.args[1], 1);
            case TermOp::Mul:
              return print_term_prec(rep.args[0], 1) + " * " + print_term_prec(rep.args[1], 2);
            case TermOp::Div:
              return print_term_prec(rep.args[0], 1) + " / " + print_term_prec(rep.args[1], 2);
            default:
              return std::string(term_op_name(rep.op)) + "(" + print_term_prec(rep.args[0], 0) +
                     ", " + print_term_prec(rep.args[1], 0) + ")";
          }
        }
      },
      t.rep());
  if (term_precedence(t) < parent_prec) return "(" + out + ")";
  return out;
}

int pred_precedence(const Predicate& p) {
  if (std::holds_alternative<Predicate::Or>(p.rep())) return 0;
  if (std::holds_alternative<Predicate::And>(p.rep())) return 1;
  return 2;
}

std::string print_pred_prec(const Predicate& p, int parent_prec) {
  std::string out = std::visit(
      [](const auto& rep) -> std::string {
        using T = std::decay_t<decltype(rep)>;
        if constexpr (std::is_same_v<T, Predicate::Comparison>) {
          return print_term_prec(rep.lhs, 0) + " " + cmp_op_symbol(rep.op) + " " +
                 print_term_prec(rep.rhs, 0);
        } else if constexpr (std::is_same_v<T, Predicate::And>) {
          std::string s;
          for (std::size_t i = 0; i < rep.parts.size(); ++i) {
            if (i > 0) s += " and ";
            s += print_pred_prec(rep.parts[i], 2);
          }
          return s;
        } else if constexpr (std::is_same_v<T, Predicate::Or>) {
          std::string s;
          for (std::size_t i = 0; i < rep.parts.size(); ++i) {
            if (i > 0) s += " or ";
            s += print_pred_prec(rep.parts[i], 1);
          }
          return s;
        } else {
          return "not (" + print_pred_prec(rep.child[0], 0) + ")";
        }
      },
      p.rep());
  if (pred_precedence(p) < parent_prec) return "(" + out + ")";
  return out;
}

std::string print_agg_spec(const AggSpec& spec) {
  std::string out = std::string(agg_kind_name(spec.kind)) + "(" + print_term_prec(spec.term, 0);
  if (spec.annot) out += ", " + print_term_prec(*spec.annot, 0);
  out += ")";
  if (!spec.name.empty()) out += " as " + spec.name;
  return out;
}

}  // namespace

std::string print_term(const Term& t) { return print_term_prec(t, 0); }
std::string print_predicate(const Predicate& p) { return print_pred_prec(p, 0); }

std::string print_query(const QueryPtr& q) {
  return std::visit(
      [](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, RelationRef>) {
          return n.label;
        } else if constexpr (std::is_same_v<T, Project>) {
          std::string s = "project[";
          for (std::size_t i = 0; i < n.terms.size(); ++i) {
            if (i > 0) s += ", ";
            s += print_term(n.terms[i]);
          }
          return s + "](" + print_query(n.child) + ")";
        } else if constexpr (std::is_same_v<T, Select>) {
          return "select[" + print_predicate(n.pred) + "](" + print_query(n.child) + ")";
        } else if constexpr (std::is_same_v<T, CrossProduct>) {
          return "times(" + print_query(n.left) + ", " + print_query(n.right) + ")";
        } else if constexpr (std::is_same_v<T, MultisetSum>) {
          return "msum(" + print_query(n.left) + ", " + print_query(n.right) + ")";
        } else if constexpr (std::is_same_v<T, DuplicateElim>) {
          return "dedup(" + print_query(n.child) + ")";
        } else if constexpr (std::is_same_v<T, MultisetDiff>) {
          return "mdiff(" + print_query(n.left) + ", " + print_query(n.right) + ")";
        } else {
          std::string s = "agg[group";
          for (std::size_t i = 0; i < n.group_cols.size(); ++i) {
            s += i == 0 ? " " : ", ";
            s += "#" + std::to_string(n.group_cols[i]);
          }
          s += "; ";
          for (std::size_t i = 0; i < n.aggs.size(); ++i) {
            if (i > 0) s += ", ";
            s += print_agg_spec(n.aggs[i]);
          }
          return s + "](" + print_query(n.child) + ")";
        }
      },
      q->rep);
}

}  // namespace provq
