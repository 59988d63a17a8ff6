#include "provq/annotated.hpp"

#include "provq/errors.hpp"
#include "provq/eval.hpp"

namespace provq {

void AnnotatedRelation::add(Tuple t, Element e, std::uint64_t count) {
  if (count == 0) return;
  if (t.arity() != arity_) {
    raise(Errc::ArityMismatch, "tuple arity " + std::to_string(t.arity()) +
                                   " differs from relation arity " + std::to_string(arity_));
  }
  auto [it, inserted] = rows_.try_emplace(Row{std::move(t), std::move(e)}, count);
  if (!inserted) it->second = checked_count_add(it->second, count);
}

void check_appropriate(const AnnotationStructure& s, const QueryPtr& q) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, RelationRef>) {
          // leaf
        } else if constexpr (std::is_same_v<T, Project> || std::is_same_v<T, Select> ||
                             std::is_same_v<T, DuplicateElim>) {
          check_appropriate(s, n.child);
        } else if constexpr (std::is_same_v<T, CrossProduct> || std::is_same_v<T, MultisetSum>) {
          check_appropriate(s, n.left);
          check_appropriate(s, n.right);
        } else if constexpr (std::is_same_v<T, MultisetDiff>) {
          if (!s.has_monus()) {
            raise(Errc::NeedsMonus,
                  "query uses multiset difference but structure '" + s.name() + "' has no monus");
          }
          check_appropriate(s, n.left);
          check_appropriate(s, n.right);
        } else {
          if (!s.has_delta()) {
            raise(Errc::NeedsDelta,
                  "query uses aggregation but structure '" + s.name() + "' has no delta");
          }
          check_appropriate(s, n.child);
        }
      },
      q->rep);
}

namespace {

AnnotatedRelation eval_node(const QueryPtr& q, const AnnotatedInstance& inst) {
  const AnnotationStructure& s = *inst.structure;
  return std::visit(
      [&](const auto& n) -> AnnotatedRelation {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, RelationRef>) {
          auto it = inst.relations.find(n.label);
          if (it == inst.relations.end()) {
            raise(Errc::UnknownRelation, "unknown relation '" + n.label + "'");
          }
          return it->second;
        } else if constexpr (std::is_same_v<T, Project>) {
          AnnotatedRelation child = eval_node(n.child, inst);
          AnnotatedRelation out(n.terms.size());
          for (const auto& [row, c] : child.rows()) {
            Tuple t;
            t.components.reserve(n.terms.size());
            for (const auto& term : n.terms) t.components.push_back(eval_term(term, row.tuple));
            out.add(std::move(t), row.element, c);
          }
          return out;
        } else if constexpr (std::is_same_v<T, Select>) {
          AnnotatedRelation child = eval_node(n.child, inst);
          AnnotatedRelation out(child.arity());
          for (const auto& [row, c] : child.rows()) {
            if (eval_predicate(n.pred, row.tuple)) out.add(row.tuple, row.element, c);
          }
          return out;
        } else if constexpr (std::is_same_v<T, CrossProduct>) {
          AnnotatedRelation left = eval_node(n.left, inst);
          AnnotatedRelation right = eval_node(n.right, inst);
          AnnotatedRelation out(left.arity() + right.arity());
          for (const auto& [lr, lc] : left.rows()) {
            for (const auto& [rr, rc] : right.rows()) {
              Tuple t;
              t.components.reserve(out.arity());
              t.components.insert(t.components.end(), lr.tuple.components.begin(),
                                  lr.tuple.components.end());
              t.components.insert(t.components.end(), rr.tuple.components.begin(),
                                  rr.tuple.components.end());
              out.add(std::move(t), s.times(lr.element, rr.element),
                      checked_count_mul(lc, rc));
            }
          }
          return out;
        } else if constexpr (std::is_same_v<T, MultisetSum>) {
          AnnotatedRelation left = eval_node(n.left, inst);
          AnnotatedRelation right = eval_node(n.right, inst);
          if (left.arity() != right.arity()) {
            raise(Errc::ArityMismatch, "multiset sum over different arities");
          }
          for (const auto& [row, c] : right.rows()) left.add(row.tuple, row.element, c);
          return left;
        } else if constexpr (std::is_same_v<T, DuplicateElim>) {
          AnnotatedRelation child = eval_node(n.child, inst);
          AnnotatedRelation out(child.arity());
          // Group rows by tuple; canonical row order fixes the fold order.
          std::map<Tuple, std::vector<Element>> groups;
          for (const auto& [row, c] : child.rows()) {
            auto& elems = groups[row.tuple];
            for (std::uint64_t i = 0; i < c; ++i) elems.push_back(row.element);
          }
          for (const auto& [t, elems] : groups) {
            out.add(t, s.plus_fold(elems), 1);
          }
          return out;
        } else if constexpr (std::is_same_v<T, MultisetDiff>) {
          AnnotatedRelation left = eval_node(n.left, inst);
          AnnotatedRelation right = eval_node(n.right, inst);
          if (left.arity() != right.arity()) {
            raise(Errc::ArityMismatch, "multiset difference over different arities");
          }
          std::map<Tuple, std::vector<Element>> right_groups;
          for (const auto& [row, c] : right.rows()) {
            auto& elems = right_groups[row.tuple];
            for (std::uint64_t i = 0; i < c; ++i) elems.push_back(row.element);
          }
          AnnotatedRelation out(left.arity());
          for (const auto& [row, c] : left.rows()) {
            auto it = right_groups.find(row.tuple);
            Element subtrahend =
                it == right_groups.end() ? s.zero() : s.plus_fold(it->second);
            out.add(row.tuple, s.monus(row.element, subtrahend), c);
          }
          return out;
        } else {
          // Aggregation: value columns become semimodule combinations of the
          // group rows, the row annotation is delta of the plus-fold.
          AnnotatedRelation child = eval_node(n.child, inst);
          AnnotatedRelation out(n.group_cols.size() + n.aggs.size());
          if (child.empty()) return out;
          struct Group {
            std::vector<std::pair<const AnnotatedRelation::Row*, std::uint64_t>> rows;
          };
          std::map<Tuple, Group> groups;
          for (const auto& [row, c] : child.rows()) {
            Tuple key;
            key.components.reserve(n.group_cols.size());
            for (int col : n.group_cols) {
              key.components.push_back(row.tuple.at(std::size_t(col) - 1));
            }
            groups[std::move(key)].rows.emplace_back(&row, c);
          }
          for (const auto& [key, group] : groups) {
            Tuple t;
            t.components = key.components;
            for (const auto& spec : n.aggs) {
              if (agg_is_fold(spec.kind) || agg_is_lifted(spec.kind)) {
                raise(Errc::TagMismatch,
                      "annotated evaluation expects plain value aggregates");
              }
              MonoidAggregate f{agg_fn_from_name(agg_kind_name(spec.kind))};
              std::vector<std::pair<Value, Element>> pairs;
              for (const auto& [row, c] : group.rows) {
                Value v = eval_term(spec.term, row->tuple);
                for (std::uint64_t i = 0; i < c; ++i) pairs.emplace_back(v, row->element);
              }
              t.components.push_back(Value::aggregate(sm_aggregate(f, std::move(pairs), s)));
            }
            std::vector<Element> elems;
            for (const auto& [row, c] : group.rows) {
              for (std::uint64_t i = 0; i < c; ++i) elems.push_back(row->element);
            }
            out.add(std::move(t), s.delta(s.plus_fold(elems)), 1);
          }
          return out;
        }
      },
      q->rep);
}

}  // namespace

AnnotatedRelation eval_annotated(const QueryPtr& q, const AnnotatedInstance& inst) {
  if (!inst.structure) raise(Errc::DomainMismatch, "annotated instance has no structure");
  return eval_node(q, inst);
}

Relation annotated_to_relation(const AnnotatedRelation& rel) {
  Relation out(rel.arity() + 1);
  for (const auto& [row, c] : rel.rows()) {
    Tuple t;
    t.components.reserve(rel.arity() + 1);
    t.components = row.tuple.components;
    t.components.push_back(Value::annotation(row.element));
    out.add(std::move(t), c);
  }
  return out;
}

AnnotatedRelation relation_to_annotated(const Relation& rel) {
  if (rel.arity() == 0) raise(Errc::ArityMismatch, "annotated view needs at least one column");
  AnnotatedRelation out(rel.arity() - 1);
  for (const auto& [t, c] : rel.counts()) {
    const Value& last = t.components.back();
    if (last.tag() != ValueTag::Annot) {
      raise(Errc::TagMismatch, "last column is not an annotation");
    }
    Tuple data;
    data.components.assign(t.components.begin(), t.components.end() - 1);
    out.add(std::move(data), last.as_annotation(), c);
  }
  return out;
}

Instance annotated_instance_as_relations(const AnnotatedInstance& inst) {
  Instance out;
  for (const auto& [label, rel] : inst.relations) {
    out.emplace(label, annotated_to_relation(rel));
  }
  return out;
}

Relation erase_annotations(const AnnotatedRelation& rel) {
  Relation out(rel.arity());
  for (const auto& [row, c] : rel.rows()) out.add(row.tuple, c);
  return out;
}

}  // namespace provq
