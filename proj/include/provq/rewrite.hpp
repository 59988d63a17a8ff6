#pragma once

#include <functional>
#include <span>

#include "provq/annotated.hpp"
#include "provq/ast.hpp"
#include "provq/relation.hpp"

namespace provq {

// Extends a k-ary relation to k+1 columns, attaching one annotation element
// per tuple occurrence. Declared tokens are consumed in canonical tuple
// order; their number must equal the relation's total multiplicity.
Relation annotate_relation(const Relation& rel, std::span<const Element> tokens);
// Same, with tokens drawn from a generator (used for fresh input gates).
Relation annotate_relation(const Relation& rel, const std::function<Element()>& fresh);

// Rewrites a query over k-ary annotated relations (annotation in column
// k+1) into a standard query whose plain evaluation carries the annotations
// along. Relation references, selections, and multiset sums pass through;
// projection, cross product, duplicate elimination, multiset difference, and
// aggregation follow the bottom-up rewrite rules. The schema supplies base
// relation arities. The result carries a marker; rewriting an already
// rewritten query is an error.
QueryPtr rewrite(const QueryPtr& q, const Schema& schema);

}  // namespace provq
