#include "provq/rewrite.hpp"

#include "provq/errors.hpp"

namespace provq {

Relation annotate_relation(const Relation& rel, std::span<const Element> tokens) {
  std::uint64_t total = rel.total_size();
  if (tokens.size() != total) {
    raise(Errc::TokenCountMismatch, "relation has " + std::to_string(total) +
                                        " tuple occurrences but " + std::to_string(tokens.size()) +
                                        " tokens were declared");
  }
  Relation out(rel.arity() + 1);
  std::size_t next = 0;
  for (const auto& [t, c] : rel.counts()) {
    for (std::uint64_t i = 0; i < c; ++i) {
      Tuple row;
      row.components.reserve(rel.arity() + 1);
      row.components = t.components;
      row.components.push_back(Value::annotation(tokens[next++]));
      out.add(std::move(row), 1);
    }
  }
  return out;
}

Relation annotate_relation(const Relation& rel, const std::function<Element()>& fresh) {
  std::vector<Element> tokens;
  tokens.reserve(std::size_t(rel.total_size()));
  for (std::uint64_t i = 0, n = rel.total_size(); i < n; ++i) tokens.push_back(fresh());
  return annotate_relation(rel, tokens);
}

namespace {

// Columns #from .. #to as terms.
std::vector<Term> column_range(int from, int to) {
  std::vector<Term> out;
  for (int i = from; i <= to; ++i) out.push_back(Term::column(i));
  return out;
}

// #1 = #(offset+1) and ... and #k = #(offset+k)
Predicate equi_join_predicate(int k, int offset) {
  std::vector<Predicate> parts;
  for (int i = 1; i <= k; ++i) {
    parts.push_back(Predicate::compare(CmpOp::Eq, Term::column(i), Term::column(offset + i)));
  }
  return Predicate::conj(std::move(parts));
}

struct Rewritten {
  QueryPtr query;
  int arity;  // arity of the original (unannotated) subquery
};

Rewritten rewrite_node(const QueryPtr& q, const Schema& schema) {
  return std::visit(
      [&](const auto& n) -> Rewritten {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, RelationRef>) {
          const TableSchema* table = schema.find(n.label);
          if (!table) raise(Errc::UnknownRelation, "unknown relation '" + n.label + "'");
          return {q, int(table->arity())};
        } else if constexpr (std::is_same_v<T, Project>) {
          auto child = rewrite_node(n.child, schema);
          std::vector<Term> terms = n.terms;
          terms.push_back(Term::column(child.arity + 1));
          return {q_project(std::move(terms), child.query), int(n.terms.size())};
        } else if constexpr (std::is_same_v<T, Select>) {
          auto child = rewrite_node(n.child, schema);
          return {q_select(n.pred, child.query), child.arity};
        } else if constexpr (std::is_same_v<T, CrossProduct>) {
          auto left = rewrite_node(n.left, schema);
          auto right = rewrite_node(n.right, schema);
          int k1 = left.arity, k2 = right.arity;
          // Data columns of both sides, then the combined annotation.
          std::vector<Term> terms = column_range(1, k1);
          auto right_cols = column_range(k1 + 2, k1 + k2 + 1);
          terms.insert(terms.end(), right_cols.begin(), right_cols.end());
          terms.push_back(Term::apply(
              TermOp::OTimes, {Term::column(k1 + 1), Term::column(k1 + k2 + 2)}));
          return {q_project(std::move(terms), q_cross(left.query, right.query)), k1 + k2};
        } else if constexpr (std::is_same_v<T, MultisetSum>) {
          auto left = rewrite_node(n.left, schema);
          auto right = rewrite_node(n.right, schema);
          return {q_msum(left.query, right.query), left.arity};
        } else if constexpr (std::is_same_v<T, DuplicateElim>) {
          auto child = rewrite_node(n.child, schema);
          int k = child.arity;
          std::vector<int> groups;
          for (int i = 1; i <= k; ++i) groups.push_back(i);
          std::vector<AggSpec> aggs{
              AggSpec{AggKind::PlusFold, Term::column(k + 1), std::nullopt, ""}};
          return {q_aggregate(std::move(groups), std::move(aggs), child.query), k};
        } else if constexpr (std::is_same_v<T, MultisetDiff>) {
          auto left = rewrite_node(n.left, schema);
          auto right = rewrite_node(n.right, schema);
          int k = left.arity;
          // Kept branch: rows of q1 whose data part never occurs in q2 pass
          // through with their annotation; membership comes from the plain
          // NOT-IN difference of the data projections.
          QueryPtr kept_filter = q_dedup(q_mdiff(q_project(column_range(1, k), left.query),
                                                 q_project(column_range(1, k), right.query)));
          QueryPtr kept = q_project(
              column_range(1, k + 1),
              q_select(equi_join_predicate(k, k + 1), q_cross(left.query, kept_filter)));
          // Monus branch: rows of q1 joined with the plus-fold of q2's
          // annotations per data tuple; annotation becomes a monus.
          std::vector<int> groups;
          for (int i = 1; i <= k; ++i) groups.push_back(i);
          QueryPtr folded_right = q_aggregate(
              std::move(groups),
              {AggSpec{AggKind::PlusFold, Term::column(k + 1), std::nullopt, ""}}, right.query);
          std::vector<Term> monus_terms = column_range(1, k);
          monus_terms.push_back(Term::apply(
              TermOp::OMinus, {Term::column(k + 1), Term::column(2 * k + 2)}));
          QueryPtr monus = q_project(
              std::move(monus_terms),
              q_select(equi_join_predicate(k, k + 1), q_cross(left.query, folded_right)));
          return {q_msum(kept, monus), k};
        } else {
          // Aggregation: lift each value aggregate with the annotation
          // column and append the delta-of-fold annotation aggregate.
          auto child = rewrite_node(n.child, schema);
          int k = child.arity;
          std::vector<AggSpec> aggs;
          for (const auto& spec : n.aggs) {
            if (agg_is_fold(spec.kind) || agg_is_lifted(spec.kind)) {
              raise(Errc::AlreadyRewritten, "query already contains provenance aggregates");
            }
            aggs.push_back(
                AggSpec{agg_lift(spec.kind), spec.term, Term::column(k + 1), spec.name});
          }
          aggs.push_back(AggSpec{AggKind::DeltaPlusFold, Term::column(k + 1), std::nullopt, ""});
          return {q_aggregate(n.group_cols, std::move(aggs), child.query),
                  int(n.group_cols.size() + n.aggs.size())};
        }
      },
      q->rep);
}

}  // namespace

QueryPtr rewrite(const QueryPtr& q, const Schema& schema) {
  if (q->provenance_rewritten) {
    raise(Errc::AlreadyRewritten, "query has already been rewritten for provenance");
  }
  auto result = rewrite_node(q, schema);
  return with_rewrite_marker(result.query);
}

}  // namespace provq
