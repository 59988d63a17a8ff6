#include "provq/validate.hpp"

#include <set>

#include "provq/errors.hpp"

namespace provq {

namespace {

bool is_user_tag(ValueTag t) { return t != ValueTag::Annot && t != ValueTag::Agg; }

ValueTag column_tag(int index, const std::vector<ValueTag>& input) {
  if (index < 1 || std::size_t(index) > input.size()) {
    raise(Errc::IndexOutOfRange, "positional index #" + std::to_string(index) +
                                     " exceeds arity " + std::to_string(input.size()));
  }
  return input[std::size_t(index) - 1];
}

}  // namespace

ValueTag type_term(const Term& t, const std::vector<ValueTag>& input) {
  return std::visit(
      [&](const auto& rep) -> ValueTag {
        using T = std::decay_t<decltype(rep)>;
        if constexpr (std::is_same_v<T, Value>) {
          if (!is_user_tag(rep.tag())) {
            raise(Errc::TagMismatch, "annotation values cannot appear as literals");
          }
          return rep.tag();
        } else if constexpr (std::is_same_v<T, int>) {
          return column_tag(rep, input);
        } else {
          ValueTag a = type_term(rep.args[0], input);
          ValueTag b = type_term(rep.args[1], input);
          switch (rep.op) {
            case TermOp::Add:
            case TermOp::Sub:
            case TermOp::Mul:
            case TermOp::Div:
              if (a != b || (a != ValueTag::Int && a != ValueTag::Real)) {
                raise(Errc::TagMismatch, std::string("arithmetic requires matching numeric "
                                                     "operands, got ") +
                                             value_tag_name(a) + " and " + value_tag_name(b));
              }
              return a;
            case TermOp::Concat:
              if (a != ValueTag::Text || b != ValueTag::Text) {
                raise(Errc::TagMismatch, "concat requires text operands");
              }
              return ValueTag::Text;
            case TermOp::OTimes:
            case TermOp::OMinus:
              if (a != ValueTag::Annot || b != ValueTag::Annot) {
                raise(Errc::TagMismatch, "annotation operators require annotation columns");
              }
              return ValueTag::Annot;
          }
          raise(Errc::TagMismatch, "bad term");
        }
      },
      t.rep());
}

void type_predicate(const Predicate& p, const std::vector<ValueTag>& input) {
  std::visit(
      [&](const auto& rep) {
        using T = std::decay_t<decltype(rep)>;
        if constexpr (std::is_same_v<T, Predicate::Comparison>) {
          ValueTag a = type_term(rep.lhs, input);
          ValueTag b = type_term(rep.rhs, input);
          if (a != b) {
            raise(Errc::TagMismatch, std::string("comparison between ") + value_tag_name(a) +
                                         " and " + value_tag_name(b));
          }
          if (!is_user_tag(a)) {
            raise(Errc::TagMismatch, "comparisons on annotation columns are not allowed");
          }
        } else if constexpr (std::is_same_v<T, Predicate::Not>) {
          type_predicate(rep.child[0], input);
        } else {
          for (const auto& part : rep.parts) type_predicate(part, input);
        }
      },
      p.rep());
}

namespace {

std::vector<ValueTag> validate_node(const QueryPtr& q, const Schema& schema, bool is_root) {
  return std::visit(
      [&](const auto& n) -> std::vector<ValueTag> {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, RelationRef>) {
          const TableSchema* table = schema.find(n.label);
          if (!table) raise(Errc::UnknownRelation, "unknown relation '" + n.label + "'");
          return table->tags;
        } else if constexpr (std::is_same_v<T, Project>) {
          auto child = validate_node(n.child, schema, false);
          std::vector<ValueTag> out;
          out.reserve(n.terms.size());
          for (const auto& t : n.terms) out.push_back(type_term(t, child));
          return out;
        } else if constexpr (std::is_same_v<T, Select>) {
          auto child = validate_node(n.child, schema, false);
          type_predicate(n.pred, child);
          return child;
        } else if constexpr (std::is_same_v<T, CrossProduct>) {
          auto left = validate_node(n.left, schema, false);
          auto right = validate_node(n.right, schema, false);
          left.insert(left.end(), right.begin(), right.end());
          return left;
        } else if constexpr (std::is_same_v<T, MultisetSum> || std::is_same_v<T, MultisetDiff>) {
          auto left = validate_node(n.left, schema, false);
          auto right = validate_node(n.right, schema, false);
          if (left.size() != right.size()) {
            raise(Errc::ArityMismatch, "operands have arities " + std::to_string(left.size()) +
                                           " and " + std::to_string(right.size()));
          }
          for (std::size_t i = 0; i < left.size(); ++i) {
            if (left[i] != right[i]) {
              raise(Errc::TagMismatch, "operand column " + std::to_string(i + 1) +
                                           " has mismatched tags");
            }
          }
          return left;
        } else if constexpr (std::is_same_v<T, DuplicateElim>) {
          return validate_node(n.child, schema, false);
        } else {
          // Aggregate. Value aggregates (plain or lifted) are restricted to
          // the root; pure annotation folds are rewrite plumbing and may
          // appear anywhere.
          bool has_value_agg = false;
          for (const auto& spec : n.aggs) has_value_agg |= !agg_is_fold(spec.kind);
          if (has_value_agg && !is_root) {
            raise(Errc::AggregationNotTopLevel, "aggregation must be the top-level operator");
          }
          auto child = validate_node(n.child, schema, false);
          std::set<int> seen;
          std::vector<ValueTag> out;
          for (int col : n.group_cols) {
            if (!seen.insert(col).second) {
              raise(Errc::IndexOutOfRange, "duplicate group column #" + std::to_string(col));
            }
            out.push_back(column_tag(col, child));
          }
          for (const auto& spec : n.aggs) {
            switch (spec.kind) {
              case AggKind::Count: {
                ValueTag t = type_term(spec.term, child);
                if (!is_user_tag(t)) raise(Errc::TagMismatch, "count over annotation column");
                out.push_back(ValueTag::Int);
                break;
              }
              case AggKind::Sum: {
                ValueTag t = type_term(spec.term, child);
                if (t != ValueTag::Int && t != ValueTag::Real) {
                  raise(Errc::TagMismatch, "sum requires a numeric term");
                }
                out.push_back(t);
                break;
              }
              case AggKind::Min:
              case AggKind::Max: {
                ValueTag t = type_term(spec.term, child);
                if (!is_user_tag(t)) raise(Errc::TagMismatch, "min/max over annotation column");
                out.push_back(t);
                break;
              }
              case AggKind::PlusFold:
              case AggKind::DeltaPlusFold: {
                ValueTag t = type_term(spec.term, child);
                if (t != ValueTag::Annot) {
                  raise(Errc::TagMismatch, "annotation fold over non-annotation column");
                }
                out.push_back(ValueTag::Annot);
                break;
              }
              default: {
                // Lifted aggregate: value term plus annotation term.
                ValueTag t = type_term(spec.term, child);
                if (!is_user_tag(t)) raise(Errc::TagMismatch, "lifted aggregate over annotation");
                if (spec.kind == AggKind::LiftSum && t != ValueTag::Int && t != ValueTag::Real) {
                  raise(Errc::TagMismatch, "sum requires a numeric term");
                }
                if (!spec.annot) {
                  raise(Errc::TagMismatch, "lifted aggregate needs an annotation term");
                }
                if (type_term(*spec.annot, child) != ValueTag::Annot) {
                  raise(Errc::TagMismatch, "lifted aggregate annotation term must be annotation");
                }
                out.push_back(ValueTag::Agg);
                break;
              }
            }
          }
          return out;
        }
      },
      q->rep);
}

}  // namespace

Validated validate(const QueryPtr& q, const Schema& schema) {
  return Validated{validate_node(q, schema, true)};
}

}  // namespace provq
