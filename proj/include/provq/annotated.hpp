#pragma once

#include <map>
#include <string>

#include "provq/ast.hpp"
#include "provq/relation.hpp"
#include "provq/semiring.hpp"

namespace provq {

// Multiset of (tuple, annotation element) rows over one structure; rows are
// stored in canonical (tuple, element) order so folds are deterministic.
class AnnotatedRelation {
 public:
  struct Row {
    Tuple tuple;
    Element element;

    bool operator<(const Row& o) const {
      int c = tuple_compare(tuple, o.tuple);
      if (c != 0) return c < 0;
      return Element::compare(element, o.element) < 0;
    }
    bool operator==(const Row& o) const {
      return tuple_compare(tuple, o.tuple) == 0 && Element::compare(element, o.element) == 0;
    }
  };
  using Rows = std::map<Row, std::uint64_t>;

  explicit AnnotatedRelation(std::size_t arity) : arity_(arity) {}

  std::size_t arity() const { return arity_; }
  void add(Tuple t, Element e, std::uint64_t count = 1);
  const Rows& rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }

  bool operator==(const AnnotatedRelation& o) const {
    return arity_ == o.arity_ && rows_ == o.rows_;
  }

 private:
  std::size_t arity_;
  Rows rows_;
};

struct AnnotatedInstance {
  std::map<std::string, AnnotatedRelation> relations;
  const AnnotationStructure* structure = nullptr;
};

// A structure is appropriate for a query when it has the extra operations
// the query's operators demand: monus for multiset difference, delta for
// aggregation. Throws NeedsMonus / NeedsDelta.
void check_appropriate(const AnnotationStructure& s, const QueryPtr& q);

// Direct annotated semantics; the reference the rewriter is tested against.
AnnotatedRelation eval_annotated(const QueryPtr& q, const AnnotatedInstance& inst);

// Conversions between the annotated view and the (k+1)-column plain view the
// rewritten queries operate on.
Relation annotated_to_relation(const AnnotatedRelation& rel);
AnnotatedRelation relation_to_annotated(const Relation& rel);
Instance annotated_instance_as_relations(const AnnotatedInstance& inst);
// Drops annotations entirely (each row occurrence keeps its multiplicity).
Relation erase_annotations(const AnnotatedRelation& rel);

}  // namespace provq
