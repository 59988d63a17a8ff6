#pragma once

// Shared fixtures, random generators, and independent oracles for the test
// suites. Everything here is deliberately separate from the engine's own
// evaluation paths so it can serve as an oracle against them.

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "provq/annotated.hpp"
#include "provq/ast.hpp"
#include "provq/bool_circuit.hpp"
#include "provq/eval.hpp"
#include "provq/relation.hpp"
#include "provq/semiring.hpp"
#include "provq/validate.hpp"

namespace provq::testing {

using Rng = std::mt19937_64;

inline int pick(Rng& rng, int lo, int hi) {  // inclusive
  return int(std::uniform_int_distribution<>(lo, hi)(rng));
}

inline double pick_prob(Rng& rng) { return std::uniform_real_distribution<>(0.0, 1.0)(rng); }

// ---------------------------------------------------------------------------
// The worked personnel example (ids, names, positions, cities).
// ---------------------------------------------------------------------------

inline Relation personnel_relation() {
  Relation r(4);
  auto row = [&](std::int64_t id, const char* name, const char* position, const char* city) {
    r.add(make_tuple({Value::integer(id), Value::text(name), Value::text(position),
                      Value::text(city)}));
  };
  row(1, "John", "Director", "New York");
  row(2, "Paul", "Janitor", "New York");
  row(3, "Dave", "Analyst", "Paris");
  row(4, "Ellen", "Field agent", "Berlin");
  row(5, "Magdalen", "Double agent", "Paris");
  row(6, "Nancy", "HR", "Paris");
  row(7, "Susan", "Analyst", "Berlin");
  return r;
}

inline Schema personnel_schema() {
  Schema s;
  s.tables["Personnel"] = TableSchema{
      {"id", "name", "position", "city"},
      {ValueTag::Int, ValueTag::Text, ValueTag::Text, ValueTag::Text}};
  return s;
}

// dedup(project[#4](join[#4=#8 and #1<#5](Personnel, Personnel)))
inline QueryPtr q_city() {
  Predicate join_pred = Predicate::conj(
      {Predicate::compare(CmpOp::Eq, Term::column(4), Term::column(8)),
       Predicate::compare(CmpOp::Lt, Term::column(1), Term::column(5))});
  return q_dedup(q_project({Term::column(4)},
                           q_join(join_pred, q_relation("Personnel"), q_relation("Personnel"))));
}

// Example 14 probabilities for tokens "t1".."t7".
inline std::vector<double> personnel_probs() { return {0.5, 0.7, 0.3, 0.2, 1.0, 0.8, 0.2}; }

// ---------------------------------------------------------------------------
// Random schema / instance / query generation
// ---------------------------------------------------------------------------

struct GenOptions {
  int max_depth = 4;
  int max_relations = 3;
  int max_tuples = 6;
  int max_arity = 3;
  bool allow_diff = true;
  bool allow_aggregate = true;  // root only
};

struct GeneratedCase {
  Schema schema;
  Instance instance;
  QueryPtr query;
};

class QueryGen {
 public:
  QueryGen(Rng& rng, GenOptions options) : rng_(rng), options_(options) {}

  GeneratedCase generate() {
    GeneratedCase out;
    int nrel = pick(rng_, 1, options_.max_relations);
    for (int i = 0; i < nrel; ++i) {
      std::string label = "R" + std::to_string(i);
      TableSchema table;
      int arity = pick(rng_, 1, options_.max_arity);
      for (int c = 0; c < arity; ++c) {
        table.column_names.push_back("c" + std::to_string(c + 1));
        table.tags.push_back(pick(rng_, 0, 2) == 0 ? ValueTag::Text : ValueTag::Int);
      }
      out.schema.tables[label] = table;

      Relation rel(std::size_t(arity));
      int ntuples = pick(rng_, 0, options_.max_tuples);
      for (int t = 0; t < ntuples; ++t) {
        Tuple tuple;
        for (int c = 0; c < arity; ++c) {
          tuple.components.push_back(random_value(table.tags[std::size_t(c)]));
        }
        rel.add(std::move(tuple), 1);
      }
      out.instance.emplace(label, std::move(rel));
    }
    schema_ = &out.schema;

    auto [q, tags] = gen_query(options_.max_depth);
    if (options_.allow_aggregate && !tags.empty() && pick(rng_, 0, 3) == 0) {
      q = wrap_aggregate(q, tags);
    }
    out.query = q;
    return out;
  }

 private:
  Value random_value(ValueTag tag) {
    if (tag == ValueTag::Int) return Value::integer(pick(rng_, 0, 3));
    static const char* kTexts[] = {"a", "b", "c", "d"};
    return Value::text(kTexts[pick(rng_, 0, 3)]);
  }

  Term random_term(const std::vector<ValueTag>& tags, ValueTag want) {
    std::vector<int> candidates;
    for (std::size_t i = 0; i < tags.size(); ++i) {
      if (tags[i] == want) candidates.push_back(int(i) + 1);
    }
    int roll = pick(rng_, 0, 9);
    if (!candidates.empty() && roll < 7) {
      int col = candidates[std::size_t(pick(rng_, 0, int(candidates.size()) - 1))];
      if (want == ValueTag::Int && roll < 2) {
        return Term::apply(pick(rng_, 0, 1) == 0 ? TermOp::Add : TermOp::Mul,
                           {Term::column(col), Term::literal(Value::integer(pick(rng_, 0, 2)))});
      }
      return Term::column(col);
    }
    return Term::literal(random_value(want));
  }

  Predicate random_predicate(const std::vector<ValueTag>& tags) {
    ValueTag want = tags[std::size_t(pick(rng_, 0, int(tags.size()) - 1))];
    static const CmpOp kOps[] = {CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge};
    Predicate cmp = Predicate::compare(kOps[pick(rng_, 0, 5)], random_term(tags, want),
                                       random_term(tags, want));
    switch (pick(rng_, 0, 5)) {
      case 0: {
        ValueTag w2 = tags[std::size_t(pick(rng_, 0, int(tags.size()) - 1))];
        return Predicate::conj({cmp, Predicate::compare(kOps[pick(rng_, 0, 5)],
                                                        random_term(tags, w2),
                                                        random_term(tags, w2))});
      }
      case 1: {
        ValueTag w2 = tags[std::size_t(pick(rng_, 0, int(tags.size()) - 1))];
        return Predicate::disj({cmp, Predicate::compare(kOps[pick(rng_, 0, 5)],
                                                        random_term(tags, w2),
                                                        random_term(tags, w2))});
      }
      case 2:
        return Predicate::negate(cmp);
      default:
        return cmp;
    }
  }

  // Projects a query onto the given target tags (columns where available,
  // literals otherwise) so msum/mdiff branches line up.
  QueryPtr coerce_to_tags(QueryPtr q, const std::vector<ValueTag>& from,
                          const std::vector<ValueTag>& to) {
    std::vector<Term> terms;
    for (ValueTag want : to) terms.push_back(random_term(from, want));
    (void)q;
    return q_project(std::move(terms), std::move(q));
  }

  std::pair<QueryPtr, std::vector<ValueTag>> gen_relation() {
    auto it = schema_->tables.begin();
    std::advance(it, pick(rng_, 0, int(schema_->tables.size()) - 1));
    return {q_relation(it->first), it->second.tags};
  }

  std::pair<QueryPtr, std::vector<ValueTag>> gen_query(int depth) {
    if (depth <= 0 || pick(rng_, 0, 4) == 0) return gen_relation();
    int op = pick(rng_, 0, options_.allow_diff ? 6 : 5);
    switch (op) {
      case 0: {  // project
        auto [child, tags] = gen_query(depth - 1);
        int n = pick(rng_, 1, 3);
        std::vector<Term> terms;
        std::vector<ValueTag> out;
        for (int i = 0; i < n; ++i) {
          ValueTag want = pick(rng_, 0, 2) == 0 ? ValueTag::Text : ValueTag::Int;
          terms.push_back(random_term(tags, want));
          out.push_back(want);
        }
        return {q_project(std::move(terms), child), out};
      }
      case 1: {  // select
        auto [child, tags] = gen_query(depth - 1);
        return {q_select(random_predicate(tags), child), tags};
      }
      case 2: {  // cross
        auto [left, ltags] = gen_query(depth - 1);
        auto [right, rtags] = gen_query(depth - 1);
        if (ltags.size() + rtags.size() > 5) {
          std::vector<Term> keep{Term::column(1)};
          std::vector<ValueTag> kt{rtags[0]};
          right = q_project(std::move(keep), right);
          rtags = kt;
        }
        std::vector<ValueTag> tags = ltags;
        tags.insert(tags.end(), rtags.begin(), rtags.end());
        return {q_cross(left, right), tags};
      }
      case 3: {  // msum
        auto [left, ltags] = gen_query(depth - 1);
        auto [right, rtags] = gen_query(depth - 1);
        return {q_msum(left, coerce_to_tags(right, rtags, ltags)), ltags};
      }
      case 4: {  // dedup
        auto [child, tags] = gen_query(depth - 1);
        return {q_dedup(child), tags};
      }
      case 5: {  // join sugar
        auto [left, ltags] = gen_query(depth - 1);
        auto [right, rtags] = gen_query(depth - 1);
        if (ltags.size() + rtags.size() > 5) {
          right = q_project({Term::column(1)}, right);
          rtags = {rtags[0]};
        }
        std::vector<ValueTag> tags = ltags;
        tags.insert(tags.end(), rtags.begin(), rtags.end());
        return {q_join(random_predicate(tags), left, right), tags};
      }
      default: {  // mdiff
        auto [left, ltags] = gen_query(depth - 1);
        auto [right, rtags] = gen_query(depth - 1);
        return {q_mdiff(left, coerce_to_tags(right, rtags, ltags)), ltags};
      }
    }
  }

  QueryPtr wrap_aggregate(QueryPtr q, const std::vector<ValueTag>& tags) {
    std::vector<int> cols(tags.size());
    for (std::size_t i = 0; i < tags.size(); ++i) cols[i] = int(i) + 1;
    std::shuffle(cols.begin(), cols.end(), rng_);
    std::vector<int> groups(cols.begin(), cols.begin() + pick(rng_, 0, int(cols.size()) - 1));

    std::vector<AggSpec> aggs;
    int naggs = pick(rng_, 1, 2);
    for (int i = 0; i < naggs; ++i) {
      std::vector<int> int_cols;
      for (std::size_t c = 0; c < tags.size(); ++c) {
        if (tags[c] == ValueTag::Int) int_cols.push_back(int(c) + 1);
      }
      int choice = pick(rng_, 0, int_cols.empty() ? 2 : 3);
      int any_col = pick(rng_, 1, int(tags.size()));
      switch (choice) {
        case 0:
          aggs.push_back(AggSpec{AggKind::Count, Term::column(any_col), std::nullopt, ""});
          break;
        case 1:
          aggs.push_back(AggSpec{AggKind::Min, Term::column(any_col), std::nullopt, ""});
          break;
        case 2:
          aggs.push_back(AggSpec{AggKind::Max, Term::column(any_col), std::nullopt, ""});
          break;
        default:
          aggs.push_back(AggSpec{
              AggKind::Sum, Term::column(int_cols[std::size_t(pick(rng_, 0, int(int_cols.size()) - 1))]),
              std::nullopt, ""});
          break;
      }
    }
    return q_aggregate(std::move(groups), std::move(aggs), std::move(q));
  }

  Rng& rng_;
  GenOptions options_;
  const Schema* schema_ = nullptr;
};

// ---------------------------------------------------------------------------
// Annotated-instance builders
// ---------------------------------------------------------------------------

// One annotation per tuple occurrence via `make(relation_index, occurrence)`.
template <typename MakeElement>
AnnotatedInstance annotate_instance(const Instance& instance, const AnnotationStructure& s,
                                    MakeElement make) {
  AnnotatedInstance out;
  out.structure = &s;
  int rel_index = 0;
  for (const auto& [label, rel] : instance) {
    AnnotatedRelation arel(rel.arity());
    int occurrence = 0;
    for (const auto& [t, c] : rel.counts()) {
      for (std::uint64_t i = 0; i < c; ++i) {
        arel.add(t, make(rel_index, occurrence++), 1);
      }
    }
    out.relations.emplace(label, std::move(arel));
    ++rel_index;
  }
  return out;
}

inline std::string token_name(int rel, int occurrence) {
  return "x" + std::to_string(rel) + "_" + std::to_string(occurrence);
}

// ---------------------------------------------------------------------------
// Independent set-semantics evaluator (EXCEPT oracle); aggregation-free.
// ---------------------------------------------------------------------------

inline std::set<Tuple> set_eval(const QueryPtr& q, const Instance& instance) {
  return std::visit(
      [&](const auto& n) -> std::set<Tuple> {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, RelationRef>) {
          std::set<Tuple> out;
          for (const auto& [t, c] : instance.at(n.label).counts()) out.insert(t);
          return out;
        } else if constexpr (std::is_same_v<T, Project>) {
          std::set<Tuple> out;
          for (const Tuple& t : set_eval(n.child, instance)) {
            Tuple row;
            for (const auto& term : n.terms) row.components.push_back(eval_term(term, t));
            out.insert(std::move(row));
          }
          return out;
        } else if constexpr (std::is_same_v<T, Select>) {
          std::set<Tuple> out;
          for (const Tuple& t : set_eval(n.child, instance)) {
            if (eval_predicate(n.pred, t)) out.insert(t);
          }
          return out;
        } else if constexpr (std::is_same_v<T, CrossProduct>) {
          std::set<Tuple> out;
          for (const Tuple& a : set_eval(n.left, instance)) {
            for (const Tuple& b : set_eval(n.right, instance)) {
              Tuple row = a;
              row.components.insert(row.components.end(), b.components.begin(),
                                    b.components.end());
              out.insert(std::move(row));
            }
          }
          return out;
        } else if constexpr (std::is_same_v<T, MultisetSum>) {
          std::set<Tuple> out = set_eval(n.left, instance);
          auto right = set_eval(n.right, instance);
          out.insert(right.begin(), right.end());
          return out;
        } else if constexpr (std::is_same_v<T, DuplicateElim>) {
          return set_eval(n.child, instance);
        } else if constexpr (std::is_same_v<T, MultisetDiff>) {
          std::set<Tuple> out;
          auto left = set_eval(n.left, instance);
          auto right = set_eval(n.right, instance);
          for (const Tuple& t : left) {
            if (!right.count(t)) out.insert(t);
          }
          return out;
        } else {
          throw std::logic_error("set_eval does not support aggregation");
        }
      },
      q->rep);
}

// Schema whose relations carry the extra annotation column.
inline Schema annotated_schema(const Schema& schema) {
  Schema out = schema;
  for (auto& [label, table] : out.tables) {
    table.column_names.push_back("annot");
    table.tags.push_back(ValueTag::Annot);
  }
  return out;
}

}  // namespace provq::testing
